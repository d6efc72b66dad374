#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "lowsnr/design.hpp"
#include "lowsnr/meanfield.hpp"
#include "lowsnr/model.hpp"
#include "lowsnr/prior.hpp"

namespace lowsnr {

struct BerryEsseenReport {
  double R1 = 0;        // ||A g||^2, g_j = q_j (psi_j''(c_j) - upsilon_p)
  double R2 = 0;        // ||t||^2, t = A psi'(c)
  double R3 = 0;        // sum t_i^4
  double R4 = 0;        // |g' t|
  double eps_norm = 0;  // ||A q - lambda_p q||
  double upsilon_p = 0;
  double alpha_p = 0;
  double q_inf = 0;
  double bound_rhs = 0;  // unit-constant Kolmogorov bound
  Eigen::VectorXd t;
};

BerryEsseenReport berry_esseen_terms(const std::vector<SitePtr>& sites, const Eigen::MatrixXd& A,
                                     const Eigen::VectorXd& c, const Eigen::VectorXd& q,
                                     double lambda_p);

/// Exact sup-distance between the empirical CDF of samples and the
/// N(ref_mean, ref_var) CDF. Requires >= 100 samples and ref_var > 0.
double ks_distance(std::vector<double> samples, double ref_mean, double ref_var);

struct SmallPOracle {
  double log_norm_const = 0;  // log integral exp(beta'A beta/2 + c'beta) prod mu_i
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double kl_qprod = 0;  // KL(mean-field product || posterior)
};

/// Tensor-quadrature ground truth over the merged per-coordinate supports.
/// Requires p <= 3.
SmallPOracle small_p_oracle(const std::vector<SitePtr>& sites, const Eigen::MatrixXd& A,
                            const Eigen::VectorXd& c);

struct CoverageJob {
  DesignSpec design;
  PriorMeasure prior;
  TruthConfig truth;
  QSpec q;
  double lambda = 0;  // lambda_p used by the interval
  double alpha = 0.05;
  CredibleInterval::Kind interval = CredibleInterval::Kind::Exact;
  int reps = 2000;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct CoverageReport {
  int n_reps = 0;
  int hits = 0;
  int failures = 0;  // replications where the solver failed
  double estimate = 0;
  double wilson_lo = 0;
  double wilson_hi = 0;
  double theory = 0;  // limiting coverage at the design's own (d0, lambda)
};

/// Replications of (draw beta*, draw y, solve mean field, build interval,
/// check q'beta*), parallelized with per-replication seeds.
CoverageReport coverage_mc(const CoverageJob& job);

}  // namespace lowsnr
