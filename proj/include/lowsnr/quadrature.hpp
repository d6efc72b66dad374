#pragma once

#include <Eigen/Dense>

namespace lowsnr {

struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Gauss-Legendre rule on [-1,1]; weights sum to 2. Golub-Welsch.
QuadratureRule gauss_legendre(int n);

/// Gauss-Hermite rule for integrals against exp(-x^2); weights sum to sqrt(pi).
QuadratureRule gauss_hermite(int n);

inline constexpr int kPriorGridNodes = 201;

/// The shared prior density grid (Gauss-Legendre, kPriorGridNodes nodes).
const QuadratureRule& prior_grid();

}  // namespace lowsnr
