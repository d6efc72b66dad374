#include "lowsnr/meanfield.hpp"

#include <cmath>

#include "lowsnr/stats.hpp"

namespace lowsnr {

MeanFieldNonConvergence::MeanFieldNonConvergence(MeanFieldSolution last)
    : std::runtime_error("mean field: no convergence after " +
                         std::to_string(last.iterations) +
                         " iterations (residual " + std::to_string(last.residual) + ")"),
      last_iterate(std::move(last)) {}

namespace {

void check_problem(const std::vector<SitePtr>& sites, const Eigen::MatrixXd& A,
                   const Eigen::VectorXd& c) {
  const auto p = static_cast<Eigen::Index>(sites.size());
  if (p == 0) throw std::invalid_argument("mean field: empty problem");
  if (A.rows() != p || A.cols() != p || c.size() != p)
    throw std::invalid_argument("mean field: dimension mismatch");
  for (const auto& s : sites)
    if (!s) throw std::invalid_argument("mean field: null site");
}

}  // namespace

MeanFieldSolution solve_fixed_point(const std::vector<SitePtr>& sites, const Eigen::MatrixXd& A,
                                    const Eigen::VectorXd& c, const MeanFieldOptions& opt) {
  check_problem(sites, A, c);
  const auto p = static_cast<Eigen::Index>(sites.size());
  if (!(opt.tol > 0.0)) throw std::invalid_argument("mean field: tol must be positive");
  if (opt.max_iter < 1) throw std::invalid_argument("mean field: max_iter must be >= 1");
  if (!(opt.damping >= 0.0 && opt.damping < 1.0))
    throw std::invalid_argument("mean field: damping must be in [0,1)");

  MeanFieldSolution sol;
  if (A.cwiseAbs().rowwise().sum().maxCoeff() >= 1.0)
    sol.warning = "row-sum norm of A is >= 1; contraction not guaranteed";

  Eigen::VectorXd u(p);
  if (opt.init) {
    if (opt.init->size() != p)
      throw std::invalid_argument("mean field: init vector has wrong length");
    u = *opt.init;
  } else {
    for (Eigen::Index i = 0; i < p; ++i) u(i) = sites[i]->tilt_mean(c(i));
  }

  bool step_ok = false;
  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    const Eigen::VectorXd s = A * u;
    double step = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      const double ui = sites[i]->tilt_mean(s(i) + c(i));
      const double next = (1.0 - opt.damping) * ui + opt.damping * u(i);
      step = std::max(step, std::abs(next - u(i)));
      u(i) = next;
    }
    if (opt.record_steps) sol.step_history.push_back(step);
    if (step < opt.tol) {
      step_ok = true;
      ++iter;
      break;
    }
  }

  sol.u = u;
  sol.s = A * u;
  sol.theta = sol.s + c;
  sol.iterations = iter;
  double resid = 0.0;
  for (Eigen::Index i = 0; i < p; ++i)
    resid = std::max(resid, std::abs(u(i) - sites[i]->tilt_mean(sol.theta(i))));
  sol.residual = resid;
  sol.converged = step_ok;
  if (!step_ok) throw MeanFieldNonConvergence(std::move(sol));
  return sol;
}

double upsilon_p(const Eigen::VectorXd& q, const std::vector<SitePtr>& sites,
                 const Eigen::VectorXd& c) {
  const auto p = static_cast<Eigen::Index>(sites.size());
  if (q.size() != p || c.size() != p)
    throw std::invalid_argument("upsilon_p: dimension mismatch");
  if (std::abs(q.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("upsilon_p: q must be a unit vector");
  double v = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) v += q(i) * q(i) * sites[i]->tilt_var(c(i));
  return v;
}

namespace {

CredibleInterval make_interval(const MeanFieldSolution& mf, const Eigen::VectorXd& q,
                               double variance, CredibleInterval::Kind kind, double alpha,
                               double lambda_p) {
  if (q.size() != mf.u.size()) throw std::invalid_argument("interval: dimension mismatch");
  if (std::abs(q.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("interval: q must be a unit vector");
  CredibleInterval ci;
  ci.center = q.dot(mf.u);
  ci.half_width = normal_two_sided_quantile(alpha) * std::sqrt(variance);
  ci.kind = kind;
  ci.alpha = alpha;
  ci.lambda_p = lambda_p;
  return ci;
}

}  // namespace

CredibleInterval exact_interval(const MeanFieldSolution& mf, const Eigen::VectorXd& q,
                                double upsilon, double lambda_p, double alpha) {
  if (!(upsilon >= 0.0)) throw std::invalid_argument("interval: upsilon must be >= 0");
  const double denom = 1.0 - lambda_p * upsilon;
  if (!(denom > 0.0))
    throw std::domain_error("interval: requires lambda_p * upsilon < 1");
  return make_interval(mf, q, upsilon / denom, CredibleInterval::Kind::Exact, alpha, lambda_p);
}

CredibleInterval nmf_interval(const MeanFieldSolution& mf, const Eigen::VectorXd& q,
                              double upsilon, double alpha) {
  if (!(upsilon >= 0.0)) throw std::invalid_argument("interval: upsilon must be >= 0");
  return make_interval(mf, q, upsilon, CredibleInterval::Kind::Nmf, alpha, 0.0);
}

double mf_point_estimate(const MeanFieldSolution& mf, const Eigen::VectorXd& q) {
  if (q.size() != mf.u.size()) throw std::invalid_argument("estimate: dimension mismatch");
  return q.dot(mf.u);
}

}  // namespace lowsnr
