#include "lowsnr/design.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lowsnr/csv.hpp"

namespace lowsnr {

WhiteNoiseDist white_noise_dist_from_string(const std::string& s) {
  if (s == "gaussian") return WhiteNoiseDist::Gaussian;
  if (s == "rademacher") return WhiteNoiseDist::Rademacher;
  if (s == "uniform_scaled") return WhiteNoiseDist::UniformScaled;
  throw std::invalid_argument("design: unknown entry distribution '" + s + "'");
}

namespace {

void check_scale(double sigma2, double gamma) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("design: sigma2 must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("design: gamma must be positive");
}

// d, A from X'X with the gamma/sigma2 factor applied once.
void fill_from_gram(DesignBundle& b, const Eigen::MatrixXd& gram) {
  b.d = b.scale * gram.diagonal();
  b.A = -b.scale * gram;
  b.A.diagonal().setZero();
}

}  // namespace

Eigen::VectorXd DesignBundle::apply_X(const Eigen::VectorXd& beta) const {
  if (beta.size() != p) throw std::invalid_argument("design: beta has wrong length");
  switch (kind) {
    case DesignKind::Identity:
      return beta;
    case DesignKind::Anova: {
      const int h = p / 2;
      const double root_p = std::sqrt(static_cast<double>(p));
      Eigen::VectorXd y(n);
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < h; ++j) y(i * h + j) = (beta(i) + beta(h + j)) / root_p;
      return y;
    }
    case DesignKind::Dense:
      return X * beta;
  }
  throw std::logic_error("design: unreachable");
}

Eigen::VectorXd DesignBundle::apply_Xt(const Eigen::VectorXd& v) const {
  if (v.size() != n) throw std::invalid_argument("design: v has wrong length");
  switch (kind) {
    case DesignKind::Identity:
      return v;
    case DesignKind::Anova: {
      const int h = p / 2;
      const double root_p = std::sqrt(static_cast<double>(p));
      Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < h; ++j) {
          const double val = v(i * h + j) / root_p;
          out(i) += val;
          out(h + j) += val;
        }
      return out;
    }
    case DesignKind::Dense:
      return X.transpose() * v;
  }
  throw std::logic_error("design: unreachable");
}

DesignBundle build_gaussian_sequence(int p, double sigma2, double gamma) {
  if (p < 1) throw std::invalid_argument("design: p must be >= 1");
  check_scale(sigma2, gamma);
  DesignBundle b;
  b.kind = DesignKind::Identity;
  b.n = p;
  b.p = p;
  b.sigma2 = sigma2;
  b.gamma = gamma;
  b.scale = gamma / sigma2;
  b.d0 = b.scale;
  b.d = Eigen::VectorXd::Constant(p, b.scale);
  b.A = Eigen::MatrixXd::Zero(p, p);
  return b;
}

DesignBundle build_anova(int p, double sigma2, double gamma) {
  if (p < 4 || p % 2 != 0)
    throw std::invalid_argument("design: ANOVA requires even p >= 4");
  check_scale(sigma2, gamma);
  DesignBundle b;
  b.kind = DesignKind::Anova;
  const int h = p / 2;
  b.n = h * h;
  b.p = p;
  b.sigma2 = sigma2;
  b.gamma = gamma;
  b.scale = gamma / sigma2;
  b.d0 = b.scale * 0.5;
  b.d = Eigen::VectorXd::Constant(p, b.scale * 0.5);
  b.A = Eigen::MatrixXd::Zero(p, p);
  const double off = -b.scale / static_cast<double>(p);
  b.A.topRightCorner(h, h).setConstant(off);
  b.A.bottomLeftCorner(h, h).setConstant(off);
  return b;
}

DesignBundle build_white_noise(int n, int p, WhiteNoiseDist dist, double sigma2, Rng& rng,
                               double gamma) {
  if (n < 1 || p < 1) throw std::invalid_argument("design: n and p must be >= 1");
  check_scale(sigma2, gamma);
  DesignBundle b;
  b.kind = DesignKind::Dense;
  b.n = n;
  b.p = p;
  b.sigma2 = sigma2;
  b.gamma = gamma;
  b.scale = gamma / sigma2;
  b.d0 = b.scale;
  b.X.resize(n, p);
  const double root_n = std::sqrt(static_cast<double>(n));
  const double root_3 = std::sqrt(3.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) {
      double e = 0;
      switch (dist) {
        case WhiteNoiseDist::Gaussian:
          e = rng.gaussian();
          break;
        case WhiteNoiseDist::Rademacher:
          e = rng.uniform() < 0.5 ? -1.0 : 1.0;
          break;
        case WhiteNoiseDist::UniformScaled:
          e = root_3 * (2.0 * rng.uniform() - 1.0);
          break;
      }
      b.X(i, j) = e / root_n;
    }
  fill_from_gram(b, b.X.transpose() * b.X);
  return b;
}

DesignBundle build_from_matrix(Eigen::MatrixXd X, double sigma2, double gamma) {
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("design: empty matrix");
  check_scale(sigma2, gamma);
  DesignBundle b;
  b.kind = DesignKind::Dense;
  b.n = static_cast<int>(X.rows());
  b.p = static_cast<int>(X.cols());
  b.sigma2 = sigma2;
  b.gamma = gamma;
  b.scale = gamma / sigma2;
  b.X = std::move(X);
  fill_from_gram(b, b.X.transpose() * b.X);
  std::vector<double> diag(b.d.data(), b.d.data() + b.p);
  std::nth_element(diag.begin(), diag.begin() + b.p / 2, diag.end());
  b.d0 = diag[b.p / 2];
  return b;
}

DesignDiagnostics design_diagnostics(const DesignBundle& bundle, int power_iters, double tol) {
  const auto& A = bundle.A;
  const int p = bundle.p;
  DesignDiagnostics out;
  out.d0 = bundle.d0;
  out.d_min_observed = bundle.d.minCoeff();
  out.homogeneity = (bundle.d.array() - bundle.d0).square().sum();
  out.alpha_p = A.array().square().rowwise().sum().maxCoeff();
  out.norm_inf = A.cwiseAbs().rowwise().sum().maxCoeff();

  // Spectral norm via power iteration on A^2 (safe for paired +/- extremes).
  Rng rng(0x5eed5eedULL);
  Eigen::VectorXd v(p);
  for (int i = 0; i < p; ++i) v(i) = rng.gaussian();
  v.normalize();
  double rayleigh = 0.0;
  bool converged = false;
  int iters = 0;
  for (; iters < power_iters; ++iters) {
    Eigen::VectorXd w = A * (A * v);
    const double norm_w = w.norm();
    if (norm_w == 0.0) {
      rayleigh = 0.0;
      converged = true;
      break;
    }
    w /= norm_w;
    const double r = w.dot(A * (A * w));
    if (std::abs(r - rayleigh) <= tol * std::max(1.0, std::abs(r))) {
      rayleigh = r;
      v = w;
      converged = true;
      break;
    }
    rayleigh = r;
    v = w;
  }
  out.norm2 = std::sqrt(std::max(0.0, rayleigh));
  out.power_converged = converged;
  out.power_iterations = iters;

  // l4 norm bracket: Boyd iteration from below, interpolation bound from above.
  Eigen::VectorXd x(p);
  for (int i = 0; i < p; ++i) x(i) = rng.gaussian();
  x /= std::pow(x.array().abs().pow(4).sum(), 0.25);
  double best = 0.0;
  for (int k = 0; k < power_iters; ++k) {
    Eigen::VectorXd y = A * x;
    const double ly4 = std::pow(y.array().abs().pow(4).sum(), 0.25);
    if (ly4 <= best + tol * std::max(1.0, best) && k > 0) {
      best = std::max(best, ly4);
      break;
    }
    best = std::max(best, ly4);
    if (ly4 == 0.0) break;
    // Dual ascent: psi_4 then psi_{4/3} of the transported vector.
    Eigen::VectorXd w = (y.array().abs().pow(3) * y.array().sign()).matrix();
    Eigen::VectorXd z = A * w;  // A symmetric
    Eigen::VectorXd xn = (z.array().abs().pow(1.0 / 3.0) * z.array().sign()).matrix();
    const double lx4 = std::pow(xn.array().abs().pow(4).sum(), 0.25);
    if (lx4 == 0.0) break;
    x = xn / lx4;
  }
  out.norm4_lower = std::max(out.norm2, best);
  out.norm4_upper = std::min(out.norm_inf, std::sqrt(out.norm2 * out.norm_inf));
  // float noise can push the lower estimate a few ulp past the upper bound
  out.norm4_lower = std::min(out.norm4_lower, out.norm4_upper);
  return out;
}

std::pair<double, double> eigenpair_residual(const DesignBundle& bundle, const Eigen::VectorXd& q,
                                             double lambda_p) {
  if (q.size() != bundle.p) throw std::invalid_argument("eigenpair: q has wrong length");
  if (std::abs(q.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("eigenpair: q must be a unit vector");
  const double resid = (bundle.A * q - lambda_p * q).norm();
  return {resid, q.cwiseAbs().maxCoeff()};
}

DesignBundle build_design(const DesignSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case DesignKind::Identity:
      return build_gaussian_sequence(spec.p, spec.sigma2, spec.gamma);
    case DesignKind::Anova:
      return build_anova(spec.p, spec.sigma2, spec.gamma);
    case DesignKind::Dense:
      if (!spec.csv_path.empty())
        return build_from_matrix(read_matrix_csv(spec.csv_path), spec.sigma2, spec.gamma);
      return build_white_noise(spec.n, spec.p, spec.dist, spec.sigma2, rng, spec.gamma);
  }
  throw std::logic_error("design: unreachable");
}

Eigen::VectorXd build_q(const QSpec& spec, int p) {
  if (p < 1) throw std::invalid_argument("q: p must be >= 1");
  const double root_p = std::sqrt(static_cast<double>(p));
  switch (spec.kind) {
    case QSpec::Kind::Uniform:
      return Eigen::VectorXd::Constant(p, 1.0 / root_p);
    case QSpec::Kind::Contrast: {
      if (p % 2 != 0) throw std::invalid_argument("q: contrast requires even p");
      Eigen::VectorXd q(p);
      q.head(p / 2).setConstant(1.0 / root_p);
      q.tail(p / 2).setConstant(-1.0 / root_p);
      return q;
    }
    case QSpec::Kind::Alternating: {
      Eigen::VectorXd q(p);
      for (int i = 0; i < p; ++i) q(i) = ((i % 2 == 0) ? 1.0 : -1.0) / root_p;
      return q;
    }
    case QSpec::Kind::Custom: {
      Eigen::VectorXd q = read_vector_csv(spec.csv_path);
      if (q.size() != p) throw std::invalid_argument("q: custom vector has wrong length");
      const double norm = q.norm();
      if (!(norm > 0)) throw std::invalid_argument("q: custom vector is zero");
      return q / norm;
    }
  }
  throw std::logic_error("q: unreachable");
}

double auto_lambda(const DesignSpec& design, const QSpec& q) {
  if (design.kind == DesignKind::Anova) {
    const double scale = design.gamma / design.sigma2;
    if (q.kind == QSpec::Kind::Uniform) return -0.5 * scale;
    if (q.kind == QSpec::Kind::Contrast) return 0.5 * scale;
  }
  return 0.0;
}

}  // namespace lowsnr
