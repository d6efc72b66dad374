#include "lowsnr/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "lowsnr/stats.hpp"

namespace lowsnr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_atoms(const std::vector<PriorMeasure::Atom>& atoms) {
  for (const auto& a : atoms) {
    if (!std::isfinite(a.loc) || std::abs(a.loc) > 1.0)
      throw std::invalid_argument("prior: atom location outside [-1,1]");
    if (!std::isfinite(a.weight) || a.weight < 0.0)
      throw std::invalid_argument("prior: atom weight must be nonnegative");
  }
}

bool atoms_symmetric(const std::vector<PriorMeasure::Atom>& atoms) {
  for (const auto& a : atoms) {
    if (a.weight == 0.0) continue;
    bool matched = false;
    for (const auto& b : atoms) {
      if (std::abs(b.loc + a.loc) < 1e-12 && std::abs(b.weight - a.weight) < 1e-12) {
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

bool density_symmetric(const Eigen::VectorXd& f) {
  const int n = static_cast<int>(f.size());
  for (int k = 0; k < n; ++k) {
    const double scale = std::max({1.0, std::abs(f(k)), std::abs(f(n - 1 - k))});
    if (std::abs(f(k) - f(n - 1 - k)) > 1e-12 * scale) return false;
  }
  return true;
}

}  // namespace

PriorMeasure PriorMeasure::from_atoms(std::vector<Atom> atoms) {
  check_atoms(atoms);
  std::erase_if(atoms, [](const Atom& a) { return a.weight == 0.0; });
  if (atoms.empty()) throw std::invalid_argument("prior: no mass");
  double total = 0.0;
  for (const auto& a : atoms) total += a.weight;
  if (!(total > 0.0)) throw std::invalid_argument("prior: no mass");
  for (auto& a : atoms) a.weight /= total;
  PriorMeasure mu;
  mu.symmetric = atoms_symmetric(atoms);
  mu.atoms = std::move(atoms);
  return mu;
}

PriorMeasure PriorMeasure::from_density(const Eigen::VectorXd& density_at_nodes, int n_nodes) {
  return mixed({}, density_at_nodes, 1.0, n_nodes);
}

PriorMeasure PriorMeasure::mixed(std::vector<Atom> atoms, const Eigen::VectorXd& density_at_nodes,
                                 double continuous_mass, int n_nodes) {
  check_atoms(atoms);
  std::erase_if(atoms, [](const Atom& a) { return a.weight == 0.0; });
  if (density_at_nodes.size() != n_nodes)
    throw std::invalid_argument("prior: density size does not match the grid");
  if (!(continuous_mass >= 0.0))
    throw std::invalid_argument("prior: continuous mass must be nonnegative");
  for (int k = 0; k < density_at_nodes.size(); ++k)
    if (!std::isfinite(density_at_nodes(k)) || density_at_nodes(k) < 0.0)
      throw std::invalid_argument("prior: density values must be finite and nonnegative");

  const QuadratureRule rule = n_nodes == kPriorGridNodes ? prior_grid() : gauss_legendre(n_nodes);
  const double raw_cont = rule.weights.dot(density_at_nodes);
  double atom_mass = 0.0;
  for (const auto& a : atoms) atom_mass += a.weight;
  if (!(raw_cont > 0.0) && atoms.empty()) throw std::invalid_argument("prior: no mass");

  PriorMeasure mu;
  mu.grid_nodes = rule.nodes;
  mu.grid_weights = rule.weights;
  if (raw_cont > 0.0) {
    // Scale the continuous part to carry continuous_mass relative to unit
    // atom mass, then normalize everything to 1.
    const double total = atom_mass + continuous_mass;
    if (!(total > 0.0)) throw std::invalid_argument("prior: no mass");
    mu.density = density_at_nodes * (continuous_mass / raw_cont / total);
    for (auto& a : atoms) a.weight /= total;
  } else {
    mu.density = Eigen::VectorXd();
    mu.grid_nodes = Eigen::VectorXd();
    mu.grid_weights = Eigen::VectorXd();
    for (auto& a : atoms) a.weight /= atom_mass;
  }
  const bool asym = atoms_symmetric(atoms);
  const bool dsym = mu.density.size() == 0 || density_symmetric(mu.density);
  mu.symmetric = asym && dsym;
  mu.atoms = std::move(atoms);
  return mu;
}

PriorMeasure PriorMeasure::preset(const std::string& name) {
  if (name == "uniform")
    return from_density(Eigen::VectorXd::Constant(kPriorGridNodes, 0.5));
  if (name == "rademacher") return from_atoms({{-1.0, 0.5}, {1.0, 0.5}});
  if (name == "three_point")
    return from_atoms({{-1.0, 1.0 / 3.0}, {0.0, 1.0 / 3.0}, {1.0, 1.0 / 3.0}});
  if (name == "delta0") return from_atoms({{0.0, 1.0}});
  if (name == "spike_slab_base")
    return from_atoms({{0.0, 0.5}, {-1.0, 0.25}, {1.0, 0.25}});
  throw std::invalid_argument("prior: unknown preset '" + name + "'");
}

TiltedSite::TiltedSite(PriorMeasure base, double d) : base_(std::move(base)), d_(d) {
  if (!std::isfinite(d) || d < 0.0) throw std::invalid_argument("site: d must be >= 0");
  n_atoms_ = static_cast<int>(base_.atoms.size());
  const int n_grid = static_cast<int>(base_.density.size());
  z_.resize(n_atoms_ + n_grid);
  logw_.resize(n_atoms_ + n_grid);
  for (int i = 0; i < n_atoms_; ++i) {
    z_(i) = base_.atoms[i].loc;
    logw_(i) = std::log(base_.atoms[i].weight) - 0.5 * d * z_(i) * z_(i);
  }
  grid_logdens_.resize(n_grid);
  for (int k = 0; k < n_grid; ++k) {
    const double z = base_.grid_nodes(k);
    z_(n_atoms_ + k) = z;
    const double f = base_.density(k);
    const double logf = f > 0.0 ? std::log(f) : -kInf;
    logw_(n_atoms_ + k) = logf + std::log(base_.grid_weights(k)) - 0.5 * d * z * z;
    grid_logdens_(k) = logf - 0.5 * d * z * z;
  }
  const double log_z = log_sum_exp({logw_.data(), static_cast<size_t>(logw_.size())});
  logw_.array() -= log_z;
  grid_logdens_.array() -= log_z;
  int support = 0;
  for (int i = 0; i < logw_.size(); ++i)
    if (logw_(i) > -kInf) ++support;
  degenerate_ = support <= 1;
}

TiltedSite::Moments TiltedSite::moments(double theta) const {
  if (!std::isfinite(theta) || std::abs(theta) > 1e6)
    throw std::domain_error("site: theta outside the supported range");
  double m = -kInf;
  for (int i = 0; i < z_.size(); ++i) m = std::max(m, logw_(i) + theta * z_(i));
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < z_.size(); ++i) {
    const double w = std::exp(logw_(i) + theta * z_(i) - m);
    s0 += w;
    s1 += w * z_(i);
    s2 += w * z_(i) * z_(i);
  }
  const double mean = s1 / s0;
  const double var = std::max(0.0, s2 / s0 - mean * mean);
  return {m + std::log(s0), mean, var};
}

double TiltedSite::log_mgf(double theta) const { return moments(theta).log_mgf; }
double TiltedSite::tilt_mean(double theta) const { return moments(theta).mean; }
double TiltedSite::tilt_var(double theta) const { return moments(theta).var; }

double TiltedSite::sample(double theta, Rng& rng) const {
  if (!std::isfinite(theta) || std::abs(theta) > 1e6)
    throw std::domain_error("site: theta outside the supported range");
  double m = -kInf;
  for (int i = 0; i < z_.size(); ++i) m = std::max(m, logw_(i) + theta * z_(i));
  const int n_grid = static_cast<int>(grid_logdens_.size());
  double atom_mass = 0.0, grid_mass = 0.0;
  for (int i = 0; i < n_atoms_; ++i) atom_mass += std::exp(logw_(i) + theta * z_(i) - m);
  for (int k = 0; k < n_grid; ++k)
    grid_mass += std::exp(logw_(n_atoms_ + k) + theta * z_(n_atoms_ + k) - m);
  const double total = atom_mass + grid_mass;
  double u = rng.uniform() * total;

  if ((u < atom_mass || n_grid == 0 || grid_mass <= 0.0) && n_atoms_ > 0) {
    double cum = 0.0;
    for (int i = 0; i < n_atoms_; ++i) {
      cum += std::exp(logw_(i) + theta * z_(i) - m);
      if (u <= cum) return z_(i);
    }
    return z_(n_atoms_ - 1);
  }

  // Continuous part: piecewise-linear CDF with knots at the grid nodes and
  // flat extensions to the interval ends.
  double v = u - atom_mass;
  Eigen::VectorXd g(n_grid);
  for (int k = 0; k < n_grid; ++k)
    g(k) = std::exp(grid_logdens_(k) + theta * base_.grid_nodes(k) - m);
  double trap_total = g(0) * (base_.grid_nodes(0) + 1.0);
  for (int k = 0; k + 1 < n_grid; ++k)
    trap_total +=
        0.5 * (g(k) + g(k + 1)) * (base_.grid_nodes(k + 1) - base_.grid_nodes(k));
  trap_total += g(n_grid - 1) * (1.0 - base_.grid_nodes(n_grid - 1));
  if (!(trap_total > 0.0)) return base_.grid_nodes(n_grid / 2);
  v *= trap_total / grid_mass;

  double left = -1.0, cum = 0.0;
  double seg = g(0) * (base_.grid_nodes(0) + 1.0);
  if (v <= cum + seg)
    return left + (seg > 0 ? (v - cum) / seg : 0.5) * (base_.grid_nodes(0) - left);
  cum += seg;
  for (int k = 0; k + 1 < n_grid; ++k) {
    left = base_.grid_nodes(k);
    const double right = base_.grid_nodes(k + 1);
    seg = 0.5 * (g(k) + g(k + 1)) * (right - left);
    if (v <= cum + seg) return left + (seg > 0 ? (v - cum) / seg : 0.5) * (right - left);
    cum += seg;
  }
  left = base_.grid_nodes(n_grid - 1);
  seg = g(n_grid - 1) * (1.0 - left);
  return left + (seg > 0 ? std::min(1.0, (v - cum) / seg) : 0.5) * (1.0 - left);
}

std::vector<SitePtr> make_sites(const PriorMeasure& base, const Eigen::VectorXd& d) {
  std::map<double, SitePtr> cache;
  std::vector<SitePtr> sites;
  sites.reserve(d.size());
  for (int i = 0; i < d.size(); ++i) {
    auto it = cache.find(d(i));
    if (it == cache.end())
      it = cache.emplace(d(i), std::make_shared<const TiltedSite>(base, d(i))).first;
    sites.push_back(it->second);
  }
  return sites;
}

}  // namespace lowsnr
