#include "lowsnr/model.hpp"

#include <cmath>
#include <stdexcept>

namespace lowsnr {

TruthMeasure TruthMeasure::from_prior(const PriorMeasure& mu) {
  TruthMeasure t;
  t.atoms = mu.atoms;
  t.grid_nodes = mu.grid_nodes;
  if (mu.density.size() > 0)
    t.grid_masses = mu.grid_weights.cwiseProduct(mu.density);
  t.symmetric = mu.symmetric;
  return t;
}

TruthMeasure TruthMeasure::preset(const std::string& name) {
  if (name == "gaussian") {
    TruthMeasure t;
    t.gauss.push_back({0.0, 1.0, 1.0});
    t.symmetric = true;
    return t;
  }
  if (name == "gauss_mix") {
    TruthMeasure t;
    t.atoms.push_back({0.0, 0.5});
    t.gauss.push_back({0.0, 1.0, 0.5});
    t.symmetric = true;
    return t;
  }
  return from_prior(PriorMeasure::preset(name));
}

double TruthMeasure::sample(Rng& rng) const {
  double atom_mass = 0.0;
  for (const auto& a : atoms) atom_mass += a.weight;
  double grid_mass = grid_masses.size() > 0 ? grid_masses.sum() : 0.0;
  double gauss_mass = 0.0;
  for (const auto& g : gauss) gauss_mass += g.weight;
  const double total = atom_mass + grid_mass + gauss_mass;
  if (!(total > 0.0)) throw std::logic_error("truth: no mass");
  double u = rng.uniform() * total;
  for (const auto& a : atoms) {
    if (u < a.weight) return a.loc;
    u -= a.weight;
  }
  if (u < grid_mass && grid_nodes.size() > 0) {
    // Each node's mass spread over its midpoint cell.
    const int n = static_cast<int>(grid_nodes.size());
    double cum = 0.0;
    for (int k = 0; k < n; ++k) {
      cum += grid_masses(k);
      if (u <= cum) {
        const double left = k == 0 ? -1.0 : 0.5 * (grid_nodes(k - 1) + grid_nodes(k));
        const double right = k + 1 == n ? 1.0 : 0.5 * (grid_nodes(k) + grid_nodes(k + 1));
        const double frac = grid_masses(k) > 0 ? (cum - u) / grid_masses(k) : 0.5;
        return right - frac * (right - left);
      }
    }
    return grid_nodes(n - 1);
  }
  u -= grid_mass;
  for (const auto& g : gauss) {
    if (u < g.weight) return g.mean + g.sd * rng.gaussian();
    u -= g.weight;
  }
  return gauss.back().mean + gauss.back().sd * rng.gaussian();
}

std::vector<std::pair<double, double>> TruthMeasure::integration_nodes(int gh_nodes) const {
  std::vector<std::pair<double, double>> nodes;
  for (const auto& a : atoms) nodes.emplace_back(a.loc, a.weight);
  for (int k = 0; k < grid_masses.size(); ++k)
    if (grid_masses(k) > 0.0) nodes.emplace_back(grid_nodes(k), grid_masses(k));
  if (!gauss.empty()) {
    const QuadratureRule gh = gauss_hermite(gh_nodes);
    const double root_pi = std::sqrt(M_PI);
    for (const auto& g : gauss)
      for (int k = 0; k < gh_nodes; ++k)
        nodes.emplace_back(g.mean + std::sqrt(2.0) * g.sd * gh.nodes(k),
                           g.weight * gh.weights(k) / root_pi);
  }
  return nodes;
}

double TruthMeasure::mean() const {
  double m = 0.0;
  for (const auto& [x, w] : integration_nodes()) m += w * x;
  return m;
}

double TruthMeasure::variance() const {
  double m = mean(), s2 = 0.0;
  for (const auto& [x, w] : integration_nodes()) s2 += w * (x - m) * (x - m);
  return s2;
}

Eigen::VectorXd draw_truth(const TruthConfig& truth, int p, Rng& rng) {
  if (p < 1) throw std::invalid_argument("truth: p must be >= 1");
  switch (truth.kind) {
    case TruthConfig::Kind::Fixed:
      if (truth.fixed_beta.size() != p)
        throw std::invalid_argument("truth: fixed beta has wrong length");
      return truth.fixed_beta;
    case TruthConfig::Kind::Iid: {
      Eigen::VectorXd beta(p);
      for (int i = 0; i < p; ++i) beta(i) = truth.mu_star.sample(rng);
      return beta;
    }
    case TruthConfig::Kind::SpikeSlab: {
      // r_p ~ Beta(1, p^u) via inverse CDF.
      const double b = std::pow(static_cast<double>(p), truth.spike_u);
      const double r = 1.0 - std::pow(1.0 - rng.uniform(), 1.0 / b);
      Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
      for (int i = 0; i < p; ++i)
        if (rng.uniform() < r) beta(i) = truth.slab.sample(rng);
      return beta;
    }
  }
  throw std::logic_error("truth: unreachable");
}

Eigen::VectorXd generate_y(const DesignBundle& bundle, const Eigen::VectorXd& beta_star,
                           double sigma2_true, Rng& rng) {
  if (!(sigma2_true >= 0.0))
    throw std::invalid_argument("model: sigma2_true must be nonnegative");
  Eigen::VectorXd y = bundle.apply_X(beta_star);
  if (sigma2_true > 0.0) {
    const double sd = std::sqrt(sigma2_true);
    for (int i = 0; i < y.size(); ++i) y(i) += sd * rng.gaussian();
  }
  return y;
}

Eigen::VectorXd posterior_field(const DesignBundle& bundle, const Eigen::VectorXd& y) {
  return bundle.scale * bundle.apply_Xt(y);
}

}  // namespace lowsnr
