#include "lowsnr/asymptotics.hpp"
#include <stdexcept>

#include <cmath>
#include <limits>

#include "doctest.h"
#include "lowsnr/rng.hpp"

using namespace lowsnr;

namespace {

constexpr double kCoverageRatio4 = 0.9999114245616786;  // 1 - erfc(1.96*2/sqrt 2)

// Simpson rule over [-1,1] for smooth f
template <typename F>
double simpson(F f, int n_panels = 800) {
  const double h = 2.0 / n_panels;
  double acc = f(-1.0) + f(1.0);
  for (int k = 1; k < n_panels; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(-1.0 + k * h);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("phi1/phi2 match direct monte carlo smoothing") {
  const TiltedSite psi0(PriorMeasure::preset("uniform"), 1.0);
  Rng rng(5150);
  for (const double m : {-0.8, 0.0, 1.1}) {
    double s1 = 0, s2 = 0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
      const auto mm = psi0.moments(m + rng.gaussian());  // W ~ N(0, d0), d0 = 1
      s1 += mm.mean;
      s2 += mm.var;
    }
    CHECK(phi1(psi0, m) == doctest::Approx(s1 / n).epsilon(2e-3));
    CHECK(phi2(psi0, m) == doctest::Approx(s2 / n).epsilon(2e-3));
  }
  // phi1 is odd and increasing for symmetric bases
  CHECK(phi1(psi0, 0.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(phi1(psi0, 0.5) == doctest::Approx(-phi1(psi0, -0.5)).epsilon(1e-12));
  CHECK(phi1(psi0, 1.0) > phi1(psi0, 0.5));
}

TEST_CASE("lambda-free moments match monte carlo and simpson oracles") {
  const double d0 = 1.0;
  const TiltedSite psi0(PriorMeasure::preset("uniform"), d0);
  const TruthMeasure mu_star = TruthMeasure::preset("uniform");
  const AsymptoticMoments mom = compute_moments(psi0, mu_star);
  CHECK(mom.d0 == doctest::Approx(d0));

  Rng rng(7431);
  const int n = 1000000;
  double s_ups = 0, s_d = 0, s_d2 = 0, s_p2 = 0;
  for (int i = 0; i < n; ++i) {
    const double b = 2.0 * rng.uniform() - 1.0;
    const double cc = d0 * b + std::sqrt(d0) * rng.gaussian();
    const auto mm = psi0.moments(cc);
    s_ups += mm.var;
    const double diff = b - mm.mean;
    s_d += diff;
    s_d2 += diff * diff;
    s_p2 += mm.mean * mm.mean;
  }
  const double mc_ups = s_ups / n;
  const double mc_var_diff = s_d2 / n - (s_d / n) * (s_d / n);
  CHECK(mom.upsilon == doctest::Approx(mc_ups).epsilon(1.5e-3));
  CHECK(mom.var_diff == doctest::Approx(mc_var_diff).epsilon(4e-3));

  // var_bias by simpson over b; E psi'^2 from the chain above
  const double m_bias = simpson([&](double b) { return 0.5 * (phi1(psi0, d0 * b) - b); });
  const double m2_bias = simpson([&](double b) {
    const double g = phi1(psi0, d0 * b) - b;
    return 0.5 * g * g;
  });
  CHECK(mom.var_bias == doctest::Approx(m2_bias - m_bias * m_bias).epsilon(2e-3));

  const double e_phi1_sq = simpson([&](double b) {
    const double g = phi1(psi0, d0 * b);
    return 0.5 * g * g;
  });
  CHECK(mom.var_cond == doctest::Approx(s_p2 / n - e_phi1_sq).epsilon(5e-3));
}

TEST_CASE("variance identities hold across priors, truths, lambdas") {
  for (const char* prior : {"uniform", "rademacher", "three_point"}) {
    const TiltedSite psi0(PriorMeasure::preset(prior), 0.8);
    for (const char* truth : {"uniform", "gauss_mix", "three_point"}) {
      const AsymptoticMoments mom = compute_moments(psi0, TruthMeasure::preset(truth));
      for (const double lambda : {-0.5, -0.2, 0.0, 0.3, 0.6}) {
        if (lambda * mom.upsilon >= 1.0) continue;
        const AsymptoticConstants cons = derive_constants(mom, lambda, 0.05);
        CHECK(cons.tau2 ==
              doctest::Approx(cons.vartheta2 + cons.varsigma2).epsilon(1e-8));
        CHECK(cons.varsigma2 >= 0.0);
        CHECK(cons.vartheta2 >= 0.0);
        CHECK(cons.tau2 > 0.0);
        CHECK(cons.upsilon > 0.0);
        CHECK(cons.coverage > 0.0);
        CHECK(cons.coverage < 1.0);
      }
    }
  }
}

TEST_CASE("well-specified models pin exact coverage at the nominal level") {
  for (const char* prior : {"uniform", "rademacher", "three_point"}) {
    for (const double d0 : {0.5, 1.0}) {
      const PriorMeasure base = PriorMeasure::preset(prior);
      const TiltedSite psi0(base, d0);
      // 128 nodes: the identity is exact, so quadrature error must sit below the tolerance
      const AsymptoticMoments mom = compute_moments(psi0, TruthMeasure::from_prior(base), 128);
      for (const double lambda : {-0.6, 0.0, 0.4}) {
        const AsymptoticConstants cons = derive_constants(mom, lambda, 0.05);
        // tau2 = upsilon / (1 - lambda upsilon) under correct specification
        CHECK(cons.tau2 ==
              doctest::Approx(cons.upsilon / (1.0 - lambda * cons.upsilon)).epsilon(1e-10));
        CHECK(cons.coverage == doctest::Approx(0.95).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("coverage formulas against frozen erfc references") {
  CHECK(coverage_limit(0.5, 0.0, 0.125, 0.05) ==
        doctest::Approx(kCoverageRatio4).epsilon(1e-10));
  CHECK(coverage_limit(0.25, 0.0, 0.25, 0.05) == doctest::Approx(0.95).epsilon(1e-10));
  CHECK(nmf_coverage_limit(0.25, 0.25, 0.05) == doctest::Approx(0.95).epsilon(1e-10));
  CHECK(nmf_coverage_limit(0.5, 0.125, 0.05) ==
        doctest::Approx(kCoverageRatio4).epsilon(1e-10));
  CHECK_THROWS_AS(coverage_limit(0.5, 2.5, 0.4, 0.05), std::domain_error);  // lambda ups >= 1
  CHECK_THROWS_AS(nmf_coverage_limit(0.5, 0.0, 0.05), std::domain_error);   // tau2 = 0
}

TEST_CASE("naive interval over-covers at negative lambda, under at positive") {
  const TiltedSite psi0(PriorMeasure::preset("uniform"), 1.0);
  const AsymptoticMoments mom = compute_moments(psi0, TruthMeasure::preset("uniform"));
  const AsymptoticConstants neg = derive_constants(mom, -0.5, 0.05);
  const AsymptoticConstants pos = derive_constants(mom, 0.5, 0.05);
  CHECK(nmf_coverage_limit(neg.upsilon, neg.tau2, 0.05) > 0.95 + 1e-3);
  CHECK(nmf_coverage_limit(pos.upsilon, pos.tau2, 0.05) < 0.95 - 1e-3);
  CHECK(neg.coverage == doctest::Approx(0.95).epsilon(1e-10));
  CHECK(pos.coverage == doctest::Approx(0.95).epsilon(1e-10));
}

TEST_CASE("gauss-hermite order is converged") {
  const TiltedSite psi0(PriorMeasure::preset("uniform"), 1.0);
  const TruthMeasure mu = TruthMeasure::preset("gauss_mix");
  const AsymptoticMoments a = compute_moments(psi0, mu, 64);
  const AsymptoticMoments b = compute_moments(psi0, mu, 128);
  CHECK(a.upsilon == doctest::Approx(b.upsilon).epsilon(1e-9));
  CHECK(a.var_cond == doctest::Approx(b.var_cond).epsilon(1e-9));
  CHECK(a.var_diff == doctest::Approx(b.var_diff).epsilon(1e-9));
  CHECK(a.var_bias == doctest::Approx(b.var_bias).epsilon(1e-9));
  CHECK(phi1(psi0, 0.7, 64) == doctest::Approx(phi1(psi0, 0.7, 128)).epsilon(1e-11));
}

TEST_CASE("clt centering agrees with a direct loop") {
  const TiltedSite psi0(PriorMeasure::preset("three_point"), 0.5);
  Eigen::VectorXd beta(5);
  beta << -1.0, 0.0, 1.0, 0.0, -1.0;  // repeated values exercise the phi1 cache
  Eigen::VectorXd q(5);
  q << 0.5, 0.5, 0.5, 0.3, 0.4;
  q.normalize();
  const double lambda = 0.4, ups = 0.3;
  const CenteringResult res = clt_centering(psi0, beta, q, lambda, ups);
  double num = 0, bias_num = 0;
  for (int i = 0; i < 5; ++i) {
    const double f = phi1(psi0, 0.5 * beta(i));
    num += q(i) * (f - lambda * ups * beta(i));
    bias_num += q(i) * (f - beta(i));
  }
  const double denom = 1.0 - lambda * ups;
  CHECK(res.centering == doctest::Approx(num / denom).epsilon(1e-12));
  CHECK(res.bias == doctest::Approx(bias_num / denom).epsilon(1e-12));
  CHECK(res.centering - res.bias == doctest::Approx(q.dot(beta)).epsilon(1e-12));
}

TEST_CASE("sparse projection limits: null, shifted, divergent") {
  const TiltedSite psi0(PriorMeasure::preset("spike_slab_base"), 1.0);
  const double null_var = [&] {
    // Var psi0'(W0) by quadrature-free monte carlo
    Rng rng(1212);
    double s1 = 0, s2 = 0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
      const double v = psi0.tilt_mean(rng.gaussian());
      s1 += v;
      s2 += v * v;
    }
    return s2 / n - (s1 / n) * (s1 / n);
  }();

  TruthMeasure sym = TruthMeasure::preset("rademacher");
  const SparseLimit a = sparse_limit(psi0, sym, 1.0, 0.75, 0.0);
  CHECK(a.kind == SparseLimit::Case::Null);
  CHECK(a.mean == 0.0);
  CHECK(a.var == doctest::Approx(null_var).epsilon(5e-3));
  // symmetric slab: the shift vanishes even with infinite zeta
  const SparseLimit a_inf =
      sparse_limit(psi0, sym, 1.0, 0.4, std::numeric_limits<double>::infinity());
  CHECK(a_inf.kind == SparseLimit::Case::Null);

  TruthMeasure point;  // delta_1 slab
  point.atoms.push_back({1.0, 1.0});
  const SparseLimit b = sparse_limit(psi0, point, 1.0, 0.5, 2.0);
  CHECK(b.kind == SparseLimit::Case::Shifted);
  CHECK(b.mean == doctest::Approx(2.0 * phi1(psi0, 1.0)).epsilon(1e-12));
  CHECK(b.var == doctest::Approx(a.var).epsilon(1e-12));

  const SparseLimit c =
      sparse_limit(psi0, point, 1.0, 0.4, std::numeric_limits<double>::infinity());
  CHECK(c.kind == SparseLimit::Case::Divergent);
}
