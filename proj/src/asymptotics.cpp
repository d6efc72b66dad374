#include "lowsnr/asymptotics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "lowsnr/quadrature.hpp"
#include "lowsnr/stats.hpp"

namespace lowsnr {

namespace {

struct GaussLayer {
  Eigen::VectorXd nodes;    // sqrt(2 d0) * Hermite nodes
  Eigen::VectorXd weights;  // normalized to sum 1
};

GaussLayer w0_layer(double d0, int gh_nodes) {
  if (!(d0 > 0.0)) throw std::invalid_argument("asymptotics: d0 must be positive");
  if (gh_nodes < 2) throw std::invalid_argument("asymptotics: need >= 2 Hermite nodes");
  const QuadratureRule gh = gauss_hermite(gh_nodes);
  GaussLayer layer;
  layer.nodes = std::sqrt(2.0 * d0) * gh.nodes;
  layer.weights = gh.weights / std::sqrt(M_PI);
  return layer;
}

// E psi0'(m+W0), E psi0'(m+W0)^2, E psi0''(m+W0) in one pass.
struct InnerMoments {
  double e1 = 0;
  double e1_sq = 0;
  double e2 = 0;
};

InnerMoments inner(const TiltedSite& psi0, double m, const GaussLayer& layer) {
  InnerMoments r;
  for (int j = 0; j < layer.nodes.size(); ++j) {
    const auto mm = psi0.moments(m + layer.nodes(j));
    r.e1 += layer.weights(j) * mm.mean;
    r.e1_sq += layer.weights(j) * mm.mean * mm.mean;
    r.e2 += layer.weights(j) * mm.var;
  }
  return r;
}

}  // namespace

double phi1(const TiltedSite& psi0, double m, int gh_nodes) {
  return inner(psi0, m, w0_layer(psi0.d(), gh_nodes)).e1;
}

double phi2(const TiltedSite& psi0, double m, int gh_nodes) {
  return inner(psi0, m, w0_layer(psi0.d(), gh_nodes)).e2;
}

AsymptoticMoments compute_moments(const TiltedSite& psi0, const TruthMeasure& mu_star,
                                  int gh_nodes) {
  const double d0 = psi0.d();
  const GaussLayer layer = w0_layer(d0, gh_nodes);
  AsymptoticMoments out;
  out.d0 = d0;
  double mean_bias = 0, m2_bias = 0, mean_diff = 0, m2_diff = 0;
  for (const auto& [b, wb] : mu_star.integration_nodes(gh_nodes)) {
    const InnerMoments im = inner(psi0, d0 * b, layer);
    out.upsilon += wb * im.e2;
    out.var_cond += wb * (im.e1_sq - im.e1 * im.e1);
    const double bias = im.e1 - b;  // phi1(d0 b) - b
    mean_bias += wb * bias;
    m2_bias += wb * bias * bias;
    mean_diff += wb * (b - im.e1);
    m2_diff += wb * (b * b - 2.0 * b * im.e1 + im.e1_sq);
  }
  out.var_bias = std::max(0.0, m2_bias - mean_bias * mean_bias);
  out.var_diff = std::max(0.0, m2_diff - mean_diff * mean_diff);
  out.var_cond = std::max(0.0, out.var_cond);
  return out;
}

AsymptoticConstants derive_constants(const AsymptoticMoments& m, double lambda, double alpha) {
  const double denom = 1.0 - lambda * m.upsilon;
  if (!(denom > 0.0))
    throw std::domain_error("asymptotics: requires lambda * upsilon < 1");
  AsymptoticConstants k;
  k.d0 = m.d0;
  k.lambda = lambda;
  k.upsilon = m.upsilon;
  k.alpha = alpha;
  const double d2 = denom * denom;
  k.varsigma2 = (m.var_cond - lambda * m.upsilon * m.upsilon) / d2;
  k.vartheta2 = m.var_bias / d2;
  k.tau2 = (m.var_diff - lambda * m.upsilon * m.upsilon) / d2;
  k.coverage = coverage_limit(k.upsilon, lambda, k.tau2, alpha);
  return k;
}

double limit_upsilon(const TiltedSite& psi0, const TruthMeasure& mu_star, int gh_nodes) {
  return compute_moments(psi0, mu_star, gh_nodes).upsilon;
}

double limit_varsigma2(const TiltedSite& psi0, const TruthMeasure& mu_star, double lambda,
                       int gh_nodes) {
  return derive_constants(compute_moments(psi0, mu_star, gh_nodes), lambda, 0.05).varsigma2;
}

TauPair limit_tau2(const TiltedSite& psi0, const TruthMeasure& mu_star, double lambda,
                   int gh_nodes) {
  const auto k = derive_constants(compute_moments(psi0, mu_star, gh_nodes), lambda, 0.05);
  return {k.tau2, k.vartheta2};
}

double coverage_limit(double upsilon, double lambda, double tau2, double alpha) {
  if (!(upsilon >= 0.0)) throw std::invalid_argument("coverage: upsilon must be >= 0");
  if (!(tau2 > 0.0)) throw std::domain_error("coverage: tau2 must be positive");
  const double denom = 1.0 - lambda * upsilon;
  if (!(denom > 0.0)) throw std::domain_error("coverage: requires lambda * upsilon < 1");
  const double c = normal_two_sided_quantile(alpha);
  return 1.0 - 2.0 * normal_upper_tail(c * std::sqrt(upsilon / (denom * tau2)));
}

double nmf_coverage_limit(double upsilon, double tau2, double alpha) {
  if (!(upsilon >= 0.0)) throw std::invalid_argument("coverage: upsilon must be >= 0");
  if (!(tau2 > 0.0)) throw std::domain_error("coverage: tau2 must be positive");
  const double c = normal_two_sided_quantile(alpha);
  return 1.0 - 2.0 * normal_upper_tail(c * std::sqrt(upsilon / tau2));
}

CenteringResult clt_centering(const TiltedSite& psi0, const Eigen::VectorXd& beta_star,
                              const Eigen::VectorXd& q, double lambda, double upsilon,
                              int gh_nodes) {
  if (beta_star.size() != q.size())
    throw std::invalid_argument("centering: dimension mismatch");
  const double denom = 1.0 - lambda * upsilon;
  if (!(denom > 0.0))
    throw std::domain_error("centering: requires lambda * upsilon < 1");
  const double d0 = psi0.d();
  const GaussLayer layer = w0_layer(d0, gh_nodes);
  std::map<double, double> cache;
  double centering = 0, bias = 0;
  for (int i = 0; i < q.size(); ++i) {
    const double b = beta_star(i);
    auto it = cache.find(b);
    if (it == cache.end()) it = cache.emplace(b, inner(psi0, d0 * b, layer).e1).first;
    const double f1 = it->second;
    centering += q(i) * (f1 - lambda * upsilon * b);
    bias += q(i) * (f1 - b);
  }
  return {centering / denom, bias / denom};
}

SparseLimit sparse_limit(const TiltedSite& psi0, const TruthMeasure& mu_tilde, double sigma2,
                         double u, double zeta, int gh_nodes) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sparse: sigma2 must be positive");
  if (!(u >= 0.0)) throw std::invalid_argument("sparse: u must be >= 0");
  const double d0 = psi0.d();
  const GaussLayer layer = w0_layer(d0, gh_nodes);
  double shift = 0.0;
  for (const auto& [b, wb] : mu_tilde.integration_nodes(gh_nodes))
    shift += wb * inner(psi0, d0 * b, layer).e1;
  const InnerMoments null = inner(psi0, 0.0, layer);
  SparseLimit out;
  out.var = std::max(0.0, null.e1_sq - null.e1 * null.e1);
  if (std::abs(shift) <= 1e-12) {
    out.kind = SparseLimit::Case::Null;
    out.mean = 0.0;
  } else if (std::isfinite(zeta)) {
    out.kind = SparseLimit::Case::Shifted;
    out.mean = zeta * shift;
  } else {
    out.kind = SparseLimit::Case::Divergent;
    out.mean = zeta * shift;
  }
  return out;
}

}  // namespace lowsnr
