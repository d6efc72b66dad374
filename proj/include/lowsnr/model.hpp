#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "lowsnr/design.hpp"
#include "lowsnr/prior.hpp"
#include "lowsnr/rng.hpp"

namespace lowsnr {

/// A signal distribution mu* (or slab mu~): point masses, a bounded continuous
/// part on the prior grid, and Gaussian components. Unlike PriorMeasure this
/// may be unbounded.
struct TruthMeasure {
  struct GaussComp {
    double mean;
    double sd;
    double weight;
  };

  std::vector<PriorMeasure::Atom> atoms;
  Eigen::VectorXd grid_nodes;
  Eigen::VectorXd grid_masses;  // quadrature weight * density, pre-multiplied
  std::vector<GaussComp> gauss;
  bool symmetric = false;

  static TruthMeasure from_prior(const PriorMeasure& mu);
  /// Presets: the prior names plus "gaussian" (N(0,1)) and "gauss_mix"
  /// (0.5 delta_0 + 0.5 N(0,1)).
  static TruthMeasure preset(const std::string& name);

  double sample(Rng& rng) const;

  /// Nodes (x, w) with sum w = 1 for expectations against the measure;
  /// Gaussian components expanded with a gauss_hermite(gh_nodes) layer.
  std::vector<std::pair<double, double>> integration_nodes(int gh_nodes = 64) const;

  double mean() const;
  double variance() const;
};

struct TruthConfig {
  enum class Kind { Fixed, Iid, SpikeSlab };
  Kind kind = Kind::Iid;
  Eigen::VectorXd fixed_beta;  // Fixed
  TruthMeasure mu_star;        // Iid
  double spike_u = 1.0;        // SpikeSlab: r_p ~ Beta(1, p^u)
  TruthMeasure slab;           // SpikeSlab: nonzero coordinates ~ slab
  double sigma2_true = 1.0;
};

/// beta* of length p. For SpikeSlab draws r_p ~ Beta(1, p^u) then each
/// coordinate 0 w.p. 1-r_p, slab draw otherwise.
Eigen::VectorXd draw_truth(const TruthConfig& truth, int p, Rng& rng);

/// y = X beta* + eps, eps ~ N(0, sigma2_true I_n). sigma2_true = 0 is a valid
/// zero-noise test hook.
Eigen::VectorXd generate_y(const DesignBundle& bundle, const Eigen::VectorXd& beta_star,
                           double sigma2_true, Rng& rng);

/// c = scale * X'y, the linear field of the (gamma-scaled) posterior.
Eigen::VectorXd posterior_field(const DesignBundle& bundle, const Eigen::VectorXd& y);

}  // namespace lowsnr
