#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowsnr/prior.hpp"

namespace lowsnr {

struct MeanFieldOptions {
  double tol = 1e-10;      // sup-norm step tolerance
  int max_iter = 10000;
  double damping = 0.0;    // u <- (1-damping)*u_new + damping*u_old
  const Eigen::VectorXd* init = nullptr;  // default psi'(c)
  bool record_steps = false;
};

struct MeanFieldSolution {
  Eigen::VectorXd u;      // coordinatewise tilted means
  Eigen::VectorXd s;      // A u
  Eigen::VectorXd theta;  // s + c
  int iterations = 0;
  double residual = 0;    // recomputed from scratch at exit
  bool converged = false;
  std::string warning;    // set when ||A||_inf >= 1
  std::vector<double> step_history;
};

struct MeanFieldNonConvergence : std::runtime_error {
  explicit MeanFieldNonConvergence(MeanFieldSolution last);
  MeanFieldSolution last_iterate;
};

/// Picard iteration for u_i = psi_i'((A u)_i + c_i) from u0 = psi'(c).
/// Throws MeanFieldNonConvergence (carrying the last iterate) if the step
/// tolerance is not reached within max_iter.
MeanFieldSolution solve_fixed_point(const std::vector<SitePtr>& sites, const Eigen::MatrixXd& A,
                                    const Eigen::VectorXd& c, const MeanFieldOptions& opt = {});

/// upsilon_p = sum_i q_i^2 psi_i''(c_i). q must be unit within 1e-10.
double upsilon_p(const Eigen::VectorXd& q, const std::vector<SitePtr>& sites,
                 const Eigen::VectorXd& c);

struct CredibleInterval {
  enum class Kind { Exact, Nmf };
  double center = 0;
  double half_width = 0;
  Kind kind = Kind::Exact;
  double alpha = 0.05;
  double lambda_p = 0;
  double lo() const { return center - half_width; }
  double hi() const { return center + half_width; }
};

/// [q'u +- c_{alpha/2} sqrt(upsilon_p / (1 - lambda_p upsilon_p))].
/// Requires 1 - lambda_p * upsilon_p > 0.
CredibleInterval exact_interval(const MeanFieldSolution& mf, const Eigen::VectorXd& q,
                                double upsilon, double lambda_p, double alpha);

/// Naive interval [q'u +- c_{alpha/2} sqrt(upsilon_p)].
CredibleInterval nmf_interval(const MeanFieldSolution& mf, const Eigen::VectorXd& q,
                              double upsilon, double alpha);

/// q'u.
double mf_point_estimate(const MeanFieldSolution& mf, const Eigen::VectorXd& q);

}  // namespace lowsnr
