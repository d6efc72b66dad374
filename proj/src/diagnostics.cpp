#include "lowsnr/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lowsnr/asymptotics.hpp"
#include "lowsnr/stats.hpp"
#include "parallel.hpp"

namespace lowsnr {

BerryEsseenReport berry_esseen_terms(const std::vector<SitePtr>& sites, const Eigen::MatrixXd& A,
                                     const Eigen::VectorXd& c, const Eigen::VectorXd& q,
                                     double lambda_p) {
  const auto p = static_cast<Eigen::Index>(sites.size());
  if (A.rows() != p || A.cols() != p || c.size() != p || q.size() != p)
    throw std::invalid_argument("berry-esseen: dimension mismatch");
  if (std::abs(q.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("berry-esseen: q must be a unit vector");

  Eigen::VectorXd psi1(p), psi2(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto m = sites[i]->moments(c(i));
    psi1(i) = m.mean;
    psi2(i) = m.var;
  }
  BerryEsseenReport rep;
  rep.upsilon_p = q.array().square().matrix().dot(psi2);
  const Eigen::VectorXd g =
      q.cwiseProduct(psi2 - Eigen::VectorXd::Constant(p, rep.upsilon_p));
  rep.t = A * psi1;
  rep.R1 = (A * g).squaredNorm();
  rep.R2 = rep.t.squaredNorm();
  rep.R3 = rep.t.array().pow(4).sum();
  rep.R4 = std::abs(g.dot(rep.t));
  rep.eps_norm = (A * q - lambda_p * q).norm();
  rep.alpha_p = A.array().square().rowwise().sum().maxCoeff();
  rep.q_inf = q.cwiseAbs().maxCoeff();
  if (rep.upsilon_p > 0.0) {
    rep.bound_rhs = std::sqrt(rep.R1) + std::sqrt(rep.alpha_p * rep.R2) +
                    (std::sqrt(rep.R3) + std::sqrt(static_cast<double>(p)) * rep.alpha_p +
                     rep.q_inf) /
                        rep.upsilon_p +
                    rep.eps_norm;
  } else {
    rep.bound_rhs = std::numeric_limits<double>::infinity();
  }
  return rep;
}

double ks_distance(std::vector<double> samples, double ref_mean, double ref_var) {
  if (samples.size() < 100) throw std::invalid_argument("ks: need at least 100 samples");
  if (!(ref_var > 0.0)) throw std::invalid_argument("ks: degenerate reference");
  std::sort(samples.begin(), samples.end());
  const double sd = std::sqrt(ref_var);
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf((samples[i] - ref_mean) / sd);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

SmallPOracle small_p_oracle(const std::vector<SitePtr>& sites, const Eigen::MatrixXd& A,
                            const Eigen::VectorXd& c) {
  const auto p = static_cast<Eigen::Index>(sites.size());
  if (p < 1 || p > 3) throw std::invalid_argument("oracle: p must be 1..3");
  if (A.rows() != p || A.cols() != p || c.size() != p)
    throw std::invalid_argument("oracle: dimension mismatch");

  // Per-coordinate support (points and log-masses of mu_i).
  std::vector<Eigen::VectorXd> zs(p), lws(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& base = sites[i]->base();
    const int na = static_cast<int>(base.atoms.size());
    const int ng = static_cast<int>(base.density.size());
    Eigen::VectorXd z(na + ng), lw(na + ng);
    for (int k = 0; k < na; ++k) {
      z(k) = base.atoms[k].loc;
      lw(k) = std::log(base.atoms[k].weight) - 0.5 * sites[i]->d() * z(k) * z(k);
    }
    for (int k = 0; k < ng; ++k) {
      const double zz = base.grid_nodes(k);
      z(na + k) = zz;
      lw(na + k) = (base.density(k) > 0
                        ? std::log(base.density(k) * base.grid_weights(k))
                        : -std::numeric_limits<double>::infinity()) -
                   0.5 * sites[i]->d() * zz * zz;
    }
    const double norm = log_sum_exp({lw.data(), static_cast<size_t>(lw.size())});
    lw.array() -= norm;
    zs[i] = z;
    lws[i] = lw;
  }

  // First pass: the log of the normalizing constant.
  std::vector<Eigen::Index> sizes(p);
  long long total = 1;
  for (Eigen::Index i = 0; i < p; ++i) {
    sizes[i] = zs[i].size();
    total *= sizes[i];
  }
  auto log_weight = [&](long long flat, Eigen::VectorXd& beta) {
    double lw = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      const auto k = flat % sizes[i];
      flat /= sizes[i];
      beta(i) = zs[i](k);
      lw += lws[i](k);
    }
    for (Eigen::Index i = 0; i < p; ++i) {
      lw += c(i) * beta(i);
      for (Eigen::Index j = i + 1; j < p; ++j) lw += A(i, j) * beta(i) * beta(j);
    }
    return lw;
  };

  Eigen::VectorXd beta(p);
  double max_lw = -std::numeric_limits<double>::infinity();
  for (long long f = 0; f < total; ++f) max_lw = std::max(max_lw, log_weight(f, beta));
  double z_sum = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(p, p);
  for (long long f = 0; f < total; ++f) {
    const double w = std::exp(log_weight(f, beta) - max_lw);
    if (w == 0.0) continue;
    z_sum += w;
    mean.noalias() += w * beta;
    second.noalias() += w * beta * beta.transpose();
  }
  SmallPOracle out;
  out.log_norm_const = max_lw + std::log(z_sum);
  out.mean = mean / z_sum;
  out.cov = second / z_sum - out.mean * out.mean.transpose();

  // KL(Q || nu) for the mean-field product at the fixed point.
  MeanFieldOptions opt;
  const MeanFieldSolution mf = solve_fixed_point(sites, A, c, opt);
  double kl = out.log_norm_const;
  Eigen::VectorXd u_hat(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto m = sites[i]->moments(mf.theta(i));
    u_hat(i) = m.mean;
    kl += mf.theta(i) * m.mean - m.log_mgf;
  }
  kl -= 0.5 * u_hat.dot(A * u_hat) + c.dot(u_hat);
  out.kl_qprod = std::max(0.0, kl);
  return out;
}

CoverageReport coverage_mc(const CoverageJob& job) {
  if (job.reps < 1) throw std::invalid_argument("coverage: reps must be >= 1");
  std::atomic<int> hits{0}, failures{0};

  parallel_for(job.reps, job.threads, [&](int rep) {
    Rng rng(derive_seed(job.seed, static_cast<std::uint64_t>(rep)));
    const DesignBundle bundle = build_design(job.design, rng);
    const Eigen::VectorXd q = build_q(job.q, bundle.p);
    const Eigen::VectorXd beta_star = draw_truth(job.truth, bundle.p, rng);
    const Eigen::VectorXd y = generate_y(bundle, beta_star, job.truth.sigma2_true, rng);
    const Eigen::VectorXd c = posterior_field(bundle, y);
    const auto sites = make_sites(job.prior, bundle.d);
    try {
      const MeanFieldSolution mf = solve_fixed_point(sites, bundle.A, c);
      const double ups = upsilon_p(q, sites, c);
      const CredibleInterval ci =
          job.interval == CredibleInterval::Kind::Exact
              ? exact_interval(mf, q, ups, job.lambda, job.alpha)
              : nmf_interval(mf, q, ups, job.alpha);
      const double target = q.dot(beta_star);
      if (target >= ci.lo() && target <= ci.hi()) hits.fetch_add(1);
    } catch (const MeanFieldNonConvergence&) {
      failures.fetch_add(1);
    }
  });

  CoverageReport rep;
  rep.n_reps = job.reps;
  rep.hits = hits.load();
  rep.failures = failures.load();
  const int effective = job.reps - rep.failures;
  const WilsonInterval wi =
      wilson_interval(static_cast<std::size_t>(rep.hits),
                      static_cast<std::size_t>(std::max(effective, 1)));
  rep.estimate = wi.estimate;
  rep.wilson_lo = wi.lo;
  rep.wilson_hi = wi.hi;

  // Limiting coverage at the design's own (d0, lambda).
  Rng rng(derive_seed(job.seed, 0xd1a6ULL));
  const DesignBundle bundle = build_design(job.design, rng);
  const TiltedSite psi0(job.prior, bundle.d0);
  TruthMeasure mu_star;
  if (job.truth.kind == TruthConfig::Kind::Iid)
    mu_star = job.truth.mu_star;
  else if (job.truth.kind == TruthConfig::Kind::Fixed)
    throw std::invalid_argument("coverage: fixed-truth jobs have no iid limit");
  else
    mu_star = TruthMeasure::preset("delta0");  // sparse signals vanish in the limit
  const AsymptoticMoments mom = compute_moments(psi0, mu_star);
  rep.theory = job.interval == CredibleInterval::Kind::Exact
                   ? derive_constants(mom, job.lambda, job.alpha).coverage
                   : nmf_coverage_limit(mom.upsilon,
                                        derive_constants(mom, job.lambda, job.alpha).tau2,
                                        job.alpha);
  return rep;
}

}  // namespace lowsnr
