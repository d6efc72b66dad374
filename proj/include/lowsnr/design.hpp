#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "lowsnr/rng.hpp"

namespace lowsnr {

enum class DesignKind { Identity, Anova, Dense };

enum class WhiteNoiseDist { Gaussian, Rademacher, UniformScaled };

WhiteNoiseDist white_noise_dist_from_string(const std::string& s);

/// Posterior ingredients for one design: the interaction matrix A (symmetric,
/// zero diagonal), the diagonal tilts d, and the scale gamma/sigma2 applied
/// uniformly so fractional posteriors are exact reparametrizations.
struct DesignBundle {
  DesignKind kind = DesignKind::Identity;
  int n = 0;
  int p = 0;
  double sigma2 = 1.0;
  double gamma = 1.0;
  double scale = 1.0;   // gamma / sigma2, the single factor used everywhere
  double d0 = 1.0;      // reference diagonal for the limit constants
  Eigen::MatrixXd X;    // stored only for Dense designs
  Eigen::VectorXd d;    // scale * diag(X'X)
  Eigen::MatrixXd A;    // -scale * offdiag(X'X)

  /// X beta without materializing X for structured designs.
  Eigen::VectorXd apply_X(const Eigen::VectorXd& beta) const;
  /// X' v.
  Eigen::VectorXd apply_Xt(const Eigen::VectorXd& v) const;
};

/// Gaussian sequence model: X = I_p, A = 0.
DesignBundle build_gaussian_sequence(int p, double sigma2, double gamma = 1.0);

/// Balanced two-way ANOVA with p/2 levels per factor and one observation per
/// cell: n = (p/2)^2, entries 1/sqrt(p). X is kept implicit. p must be even
/// and >= 4.
DesignBundle build_anova(int p, double sigma2, double gamma = 1.0);

/// X with iid entries F/sqrt(n), F in {gaussian, rademacher, uniform_scaled}
/// (mean 0, variance 1).
DesignBundle build_white_noise(int n, int p, WhiteNoiseDist dist, double sigma2, Rng& rng,
                               double gamma = 1.0);

/// Arbitrary dense X (n x p).
DesignBundle build_from_matrix(Eigen::MatrixXd X, double sigma2, double gamma = 1.0);

struct DesignDiagnostics {
  double alpha_p = 0;          // max_i sum_j A(i,j)^2
  double norm2 = 0;            // spectral norm, power iteration on A^2
  double norm_inf = 0;         // max row absolute sum
  double norm4_lower = 0;      // max(norm2, Boyd l4 iterate)
  double norm4_upper = 0;      // min(norm_inf, sqrt(norm2*norm_inf))
  double d0 = 0;
  double homogeneity = 0;      // sum_i (d_i - d0)^2
  double d_min_observed = 0;
  bool power_converged = true;
  int power_iterations = 0;
};

DesignDiagnostics design_diagnostics(const DesignBundle& bundle, int power_iters = 500,
                                     double tol = 1e-10);

/// (||A q - lambda q||_2, ||q||_inf). q must be unit within 1e-10.
std::pair<double, double> eigenpair_residual(const DesignBundle& bundle, const Eigen::VectorXd& q,
                                             double lambda_p);

/// Declarative design description, buildable per replication (white-noise
/// designs draw a fresh X from rng; the rest are deterministic).
struct DesignSpec {
  DesignKind kind = DesignKind::Identity;
  int n = 0;  // ignored for Identity/Anova
  int p = 0;
  double sigma2 = 1.0;
  double gamma = 1.0;
  WhiteNoiseDist dist = WhiteNoiseDist::Gaussian;
  std::string csv_path;  // Dense from file
};

DesignBundle build_design(const DesignSpec& spec, Rng& rng);

struct QSpec {
  enum class Kind { Uniform, Contrast, Alternating, Custom };
  Kind kind = Kind::Uniform;
  std::string csv_path;
};

/// Unit projection directions: uniform 1/sqrt(p); contrast the two-block
/// (+,-)/sqrt(p) (even p); alternating (+,-,+,...) within each block.
Eigen::VectorXd build_q(const QSpec& spec, int p);

/// The exact eigenvalue of (design, q) where known (ANOVA pairs, A = 0), else 0.
double auto_lambda(const DesignSpec& design, const QSpec& q);

}  // namespace lowsnr
