#include "lowsnr/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace lowsnr {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
// mu0 * (first eigenvector component)^2.
QuadratureRule golub_welsch(const Eigen::VectorXd& offdiag, double mu0) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) {
    jacobi(k, k + 1) = offdiag(k);
    jacobi(k + 1, k) = offdiag(k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  QuadratureRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    rule.weights(k) = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(off, 2.0);
}

QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(k / 2.0);
  return golub_welsch(off, std::sqrt(M_PI));
}

const QuadratureRule& prior_grid() {
  static const QuadratureRule rule = gauss_legendre(kPriorGridNodes);
  return rule;
}

}  // namespace lowsnr
