#pragma once

#include <Eigen/Dense>

#include "lowsnr/model.hpp"
#include "lowsnr/prior.hpp"

namespace lowsnr {

/// psi0: the site tilted at the reference diagonal d0. All W integrals are
/// against N(0, d0) by Gauss-Hermite.

/// phi1(m) = E psi0'(m + W0), W0 ~ N(0, d0).
double phi1(const TiltedSite& psi0, double m, int gh_nodes = 64);
/// phi2(m) = E psi0''(m + W0).
double phi2(const TiltedSite& psi0, double m, int gh_nodes = 64);

/// lambda-free moments of the pair (B, C), B ~ mu*, C | B ~ N(d0 B, d0).
struct AsymptoticMoments {
  double d0 = 1;
  double upsilon = 0;   // E psi0''(C)
  double var_cond = 0;  // E Var(psi0'(C) | B)
  double var_diff = 0;  // Var(B - psi0'(C))
  double var_bias = 0;  // Var(phi1(d0 B) - B)
};

AsymptoticMoments compute_moments(const TiltedSite& psi0, const TruthMeasure& mu_star,
                                  int gh_nodes = 64);

struct AsymptoticConstants {
  double d0 = 1;
  double lambda = 0;
  double upsilon = 0;
  double varsigma2 = 0;  // limit variance of the centered mean-field estimate
  double vartheta2 = 0;  // variance of the bias term
  double tau2 = 0;       // limit variance of q'(u - beta*)
  double alpha = 0.05;
  double coverage = 0;   // limiting coverage of the exact interval
};

/// Requires lambda * upsilon < 1.
AsymptoticConstants derive_constants(const AsymptoticMoments& m, double lambda, double alpha);

double limit_upsilon(const TiltedSite& psi0, const TruthMeasure& mu_star, int gh_nodes = 64);
double limit_varsigma2(const TiltedSite& psi0, const TruthMeasure& mu_star, double lambda,
                       int gh_nodes = 64);
struct TauPair {
  double tau2;
  double vartheta2;
};
TauPair limit_tau2(const TiltedSite& psi0, const TruthMeasure& mu_star, double lambda,
                   int gh_nodes = 64);

/// 1 - 2 Phibar(c_{alpha/2} sqrt(upsilon / ((1 - lambda upsilon) tau2))).
double coverage_limit(double upsilon, double lambda, double tau2, double alpha);
/// 1 - 2 Phibar(c_{alpha/2} sqrt(upsilon / tau2)).
double nmf_coverage_limit(double upsilon, double tau2, double alpha);

struct CenteringResult {
  double centering;  // (1/(1-lambda upsilon)) sum_i q_i (phi1(d0 b_i) - lambda upsilon b_i)
  double bias;       // centering - q'beta* = (1/(1-lu)) sum_i q_i (phi1(d0 b_i) - b_i)
};
CenteringResult clt_centering(const TiltedSite& psi0, const Eigen::VectorXd& beta_star,
                              const Eigen::VectorXd& q, double lambda, double upsilon,
                              int gh_nodes = 64);

struct SparseLimit {
  enum class Case { Null, Shifted, Divergent };
  Case kind = Case::Null;
  double mean = 0;
  double var = 0;
};

/// Limit of the sparse-signal projection: mean zeta * E phi1(d0 btilde) (zero
/// when the slab shift vanishes), variance Var psi0'(W0). Infinite zeta with a
/// nonvanishing shift is flagged Divergent.
SparseLimit sparse_limit(const TiltedSite& psi0, const TruthMeasure& mu_tilde, double sigma2,
                         double u, double zeta, int gh_nodes = 64);

}  // namespace lowsnr
