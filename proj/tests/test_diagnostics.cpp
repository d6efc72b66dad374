#include "lowsnr/diagnostics.hpp"
#include <stdexcept>

#include <cmath>

#include "doctest.h"
#include "lowsnr/design.hpp"
#include "lowsnr/rng.hpp"

using namespace lowsnr;

TEST_CASE("berry-esseen terms vanish for the gaussian sequence model") {
  const DesignBundle b = build_gaussian_sequence(6, 1.0);
  const auto sites = make_sites(PriorMeasure::preset("uniform"), b.d);
  const Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
  Eigen::VectorXd q(6);
  q << 1, 0, 0, 0, 0, 0;
  const BerryEsseenReport rep = berry_esseen_terms(sites, b.A, c, q, 0.0);
  CHECK(rep.R1 == 0.0);
  CHECK(rep.R2 == 0.0);
  CHECK(rep.R3 == 0.0);
  CHECK(rep.R4 == 0.0);
  CHECK(rep.eps_norm == 0.0);
  CHECK(rep.alpha_p == 0.0);
  CHECK(rep.q_inf == 1.0);
  CHECK(rep.upsilon_p > 0.0);
  // remaining bound: ||q||_inf / upsilon_p
  CHECK(rep.bound_rhs == doctest::Approx(1.0 / rep.upsilon_p).epsilon(1e-12));
}

TEST_CASE("eigen-residual term: exact eigenvector vs wrong lambda") {
  const DesignBundle b = build_anova(4, 1.0 / 0.6);  // scale 0.6
  const auto sites = make_sites(PriorMeasure::preset("uniform"), b.d);
  const Eigen::VectorXd c = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(4, 0.5);
  const BerryEsseenReport right = berry_esseen_terms(sites, b.A, c, q, -0.3);
  CHECK(right.eps_norm < 1e-14);
  const BerryEsseenReport wrong = berry_esseen_terms(sites, b.A, c, q, 0.0);
  CHECK(wrong.eps_norm == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("remainder terms equal a naive quadratic-cost loop") {
  const DesignBundle b = build_anova(10, 0.9);
  const auto sites = make_sites(PriorMeasure::preset("three_point"), b.d);
  Rng rng(2024);
  Eigen::VectorXd c(10);
  for (int i = 0; i < 10; ++i) c(i) = 0.8 * rng.gaussian();
  QSpec qs;
  qs.kind = QSpec::Kind::Uniform;
  const Eigen::VectorXd q = build_q(qs, 10);
  const double lambda = -b.scale / 2.0;
  const BerryEsseenReport rep = berry_esseen_terms(sites, b.A, c, q, lambda);

  Eigen::VectorXd psi1(10), psi2(10);
  for (int i = 0; i < 10; ++i) {
    psi1(i) = sites[i]->tilt_mean(c(i));
    psi2(i) = sites[i]->tilt_var(c(i));
  }
  double ups = 0;
  for (int i = 0; i < 10; ++i) ups += q(i) * q(i) * psi2(i);
  double r1 = 0, r2 = 0, r3 = 0, r4 = 0, en = 0;
  for (int i = 0; i < 10; ++i) {
    double ag = 0, t = 0, e = 0;
    for (int j = 0; j < 10; ++j) {
      ag += b.A(i, j) * q(j) * (psi2(j) - ups);
      t += b.A(i, j) * psi1(j);
      e += b.A(i, j) * q(j);
    }
    r1 += ag * ag;
    r2 += t * t;
    r3 += t * t * t * t;
    r4 += q(i) * (psi2(i) - ups) * t;
    en += (e - lambda * q(i)) * (e - lambda * q(i));
  }
  CHECK(rep.upsilon_p == doctest::Approx(ups).epsilon(1e-12));
  CHECK(rep.R1 == doctest::Approx(r1).epsilon(1e-10));
  CHECK(rep.R2 == doctest::Approx(r2).epsilon(1e-10));
  CHECK(rep.R3 == doctest::Approx(r3).epsilon(1e-10));
  CHECK(rep.R4 == doctest::Approx(std::abs(r4)).epsilon(1e-10));
  CHECK(rep.eps_norm == doctest::Approx(std::sqrt(en)).epsilon(1e-10));
  CHECK((rep.t - (b.A * psi1)).norm() < 1e-12);
  CHECK(rep.bound_rhs > 0.0);
}

TEST_CASE("ks distance: calibration, point mass, location shift") {
  Rng rng(606);
  std::vector<double> z(5000);
  for (auto& v : z) v = rng.gaussian();
  CHECK(ks_distance(z, 0.0, 1.0) < 0.025);
  CHECK(ks_distance(z, 1.0, 1.0) > 0.37);  // shifted reference: sup ~ 0.3829
  const std::vector<double> flat(200, 0.7);
  CHECK(ks_distance(flat, 0.0, 1.0) >= 0.5);
  CHECK_THROWS_AS(ks_distance(std::vector<double>(50, 0.0), 0.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(ks_distance(z, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("small-p oracle: product case is exact, interacting case enumerates") {
  {
    const auto sites = make_sites(PriorMeasure::preset("uniform"),
                                  Eigen::VectorXd::Constant(2, 0.5));
    const Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
    Eigen::VectorXd c(2);
    c << 0.4, -1.0;
    const SmallPOracle oracle = small_p_oracle(sites, A, c);
    CHECK(oracle.kl_qprod == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(oracle.mean(0) == doctest::Approx(sites[0]->tilt_mean(0.4)).epsilon(1e-12));
    CHECK(oracle.mean(1) == doctest::Approx(sites[1]->tilt_mean(-1.0)).epsilon(1e-12));
    CHECK(oracle.cov(0, 0) == doctest::Approx(sites[0]->tilt_var(0.4)).epsilon(1e-12));
    CHECK(oracle.cov(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
    const double logz = sites[0]->log_mgf(0.4) + sites[1]->log_mgf(-1.0);
    CHECK(oracle.log_norm_const == doctest::Approx(logz).epsilon(1e-12));
  }
  {
    // rademacher pair: enumerate the four states by hand
    const auto sites = make_sites(PriorMeasure::preset("rademacher"),
                                  Eigen::VectorXd::Zero(2));
    const double a = 0.6, c1 = 0.3, c2 = -0.5;
    Eigen::MatrixXd A(2, 2);
    A << 0.0, a, a, 0.0;
    Eigen::VectorXd c(2);
    c << c1, c2;
    double Z = 0, e1 = 0, e2 = 0, e12 = 0;
    for (const int s1 : {-1, 1})
      for (const int s2 : {-1, 1}) {
        const double w = 0.25 * std::exp(a * s1 * s2 + c1 * s1 + c2 * s2);
        Z += w;
        e1 += s1 * w;
        e2 += s2 * w;
        e12 += s1 * s2 * w;
      }
    e1 /= Z;
    e2 /= Z;
    e12 /= Z;
    const SmallPOracle oracle = small_p_oracle(sites, A, c);
    CHECK(oracle.log_norm_const == doctest::Approx(std::log(Z)).epsilon(1e-12));
    CHECK(oracle.mean(0) == doctest::Approx(e1).epsilon(1e-12));
    CHECK(oracle.mean(1) == doctest::Approx(e2).epsilon(1e-12));
    CHECK(oracle.cov(0, 1) == doctest::Approx(e12 - e1 * e2).epsilon(1e-12));
    CHECK(oracle.kl_qprod > 0.0);
  }
}

TEST_CASE("mean-field kl gap shrinks with the interaction strength") {
  const auto sites = make_sites(PriorMeasure::preset("uniform"),
                                Eigen::VectorXd::Constant(3, 1.0));
  Eigen::MatrixXd A(3, 3);
  A << 0, 0.4, -0.3, 0.4, 0, 0.2, -0.3, 0.2, 0;
  Eigen::VectorXd c(3);
  c << 0.5, -0.2, 0.1;
  const double kl_weak = small_p_oracle(sites, 0.1 * A, c).kl_qprod;
  const double kl_strong = small_p_oracle(sites, 0.4 * A, c).kl_qprod;
  CHECK(kl_weak >= 0.0);
  CHECK(kl_strong > kl_weak);
  CHECK(kl_weak < kl_strong / 4.0 + 1e-6);  // KL scales ~ quadratically in A
  CHECK_THROWS_AS(
      small_p_oracle(make_sites(PriorMeasure::preset("rademacher"),
                                Eigen::VectorXd::Zero(4)),
                     Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Zero(4)),
      std::invalid_argument);
}

TEST_CASE("coverage replications: deterministic, thread-invariant, calibrated") {
  CoverageJob job;
  job.design.kind = DesignKind::Identity;
  job.design.p = 60;
  job.design.sigma2 = 1.0;
  job.prior = PriorMeasure::preset("uniform");
  job.truth.kind = TruthConfig::Kind::Iid;
  job.truth.mu_star = TruthMeasure::preset("uniform");
  job.truth.sigma2_true = 1.0;
  job.q.kind = QSpec::Kind::Uniform;
  job.lambda = 0.0;
  job.reps = 400;
  job.seed = 97;
  job.threads = 1;
  const CoverageReport a = coverage_mc(job);
  CHECK(a.n_reps == 400);
  CHECK(a.failures == 0);
  CHECK(a.theory == doctest::Approx(0.95).epsilon(1e-9));
  CHECK(a.wilson_lo < a.estimate);
  CHECK(a.estimate < a.wilson_hi);
  CHECK(std::abs(a.estimate - 0.95) < 0.045);  // 4 binomial sigma + finite-p slack
  job.threads = 4;
  const CoverageReport b = coverage_mc(job);
  CHECK(b.hits == a.hits);  // per-replication seeding
  job.seed = 98;
  const CoverageReport c = coverage_mc(job);
  CHECK((c.hits != a.hits || c.estimate != a.estimate));
}
