#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "lowsnr/quadrature.hpp"
#include "lowsnr/rng.hpp"

namespace lowsnr {

class Rng;

/// A probability measure on [-1,1]: point masses plus an optional absolutely
/// continuous part represented by density values on a fixed Gauss-Legendre
/// grid. Construction normalizes total mass to 1.
struct PriorMeasure {
  struct Atom {
    double loc;
    double weight;
  };

  std::vector<Atom> atoms;
  Eigen::VectorXd grid_nodes;    // empty, or a Gauss-Legendre grid on [-1,1]
  Eigen::VectorXd grid_weights;  // matching quadrature weights
  Eigen::VectorXd density;       // density values at grid_nodes
  bool symmetric = false;

  /// Atom-only measure. Throws std::invalid_argument on empty/negative/
  /// out-of-range input.
  static PriorMeasure from_atoms(std::vector<Atom> atoms);

  /// Density-only measure from values at the nodes of gauss_legendre(n_nodes).
  static PriorMeasure from_density(const Eigen::VectorXd& density_at_nodes,
                                   int n_nodes = kPriorGridNodes);

  /// Atoms plus a weighted continuous part (weights of the two parts combined
  /// then normalized).
  static PriorMeasure mixed(std::vector<Atom> atoms, const Eigen::VectorXd& density_at_nodes,
                            double continuous_mass, int n_nodes = kPriorGridNodes);

  /// Named presets: "uniform", "rademacher", "three_point", "delta0",
  /// "spike_slab_base". Throws std::invalid_argument for unknown names.
  static PriorMeasure preset(const std::string& name);

  int support_size() const { return static_cast<int>(atoms.size()) + static_cast<int>(density.size()); }
};

/// One coordinate's base measure mu_i: the prior tilted by exp(-d z^2 / 2),
/// with the log-MGF psi and its derivatives evaluated by shifted log-sum-exp
/// over the discrete representation. Exact for pure-atom measures.
class TiltedSite {
 public:
  TiltedSite(PriorMeasure base, double d);

  /// psi(theta) = log integral exp(theta z) d mu_d(z).
  double log_mgf(double theta) const;
  /// psi'(theta), the tilted mean; in (-1,1) for nondegenerate bases.
  double tilt_mean(double theta) const;
  /// psi''(theta), the tilted variance; in (0,1] for nondegenerate bases.
  double tilt_var(double theta) const;

  struct Moments {
    double log_mgf;
    double mean;
    double var;
  };
  Moments moments(double theta) const;

  /// Inverse-CDF draw from the theta-tilted measure: atoms exact, continuous
  /// part piecewise linear on the CDF grid.
  double sample(double theta, Rng& rng) const;

  double d() const { return d_; }
  const PriorMeasure& base() const { return base_; }
  bool symmetric() const { return base_.symmetric; }
  bool degenerate() const { return degenerate_; }

 private:
  PriorMeasure base_;
  double d_;
  bool degenerate_;
  Eigen::VectorXd z_;      // merged support: atoms then grid nodes
  Eigen::VectorXd logw_;   // normalized log-masses under the d-tilt
  int n_atoms_;
  Eigen::VectorXd grid_logdens_;  // log tilted density at grid nodes (for sampling)
};

using SitePtr = std::shared_ptr<const TiltedSite>;

/// Sites for a diagonal vector d, sharing storage between equal d values.
std::vector<SitePtr> make_sites(const PriorMeasure& base, const Eigen::VectorXd& d);

}  // namespace lowsnr
