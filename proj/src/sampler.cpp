#include "lowsnr/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "lowsnr/stats.hpp"

namespace lowsnr {

void gibbs_sweep(Eigen::VectorXd& state, Eigen::VectorXd& m, const std::vector<SitePtr>& sites,
                 const Eigen::MatrixXd& A, const Eigen::VectorXd& c, Rng& rng,
                 ChainConfig::Sweep sweep) {
  const auto p = static_cast<Eigen::Index>(sites.size());
  for (Eigen::Index step = 0; step < p; ++step) {
    const Eigen::Index i =
        sweep == ChainConfig::Sweep::Sequential ? step : static_cast<Eigen::Index>(rng.below(p));
    const double fresh = sites[i]->sample(m(i) + c(i), rng);
    const double delta = fresh - state(i);
    if (delta != 0.0) m.noalias() += delta * A.col(i);
    state(i) = fresh;
  }
}

PosteriorSampleSet run_chain(const std::vector<SitePtr>& sites, const Eigen::MatrixXd& A,
                             const Eigen::VectorXd& c, const ChainConfig& cfg) {
  const auto p = static_cast<Eigen::Index>(sites.size());
  if (p == 0) throw std::invalid_argument("chain: empty problem");
  if (A.rows() != p || A.cols() != p || c.size() != p)
    throw std::invalid_argument("chain: dimension mismatch");
  if (cfg.n_samples < 1) throw std::invalid_argument("chain: n_samples must be >= 1");
  if (cfg.burn_in < 0) throw std::invalid_argument("chain: burn_in must be >= 0");
  if (cfg.thin < 1) throw std::invalid_argument("chain: thin must be >= 1");

  Rng rng(cfg.seed);
  Eigen::VectorXd state;
  if (cfg.init) {
    if (cfg.init->size() != p) throw std::invalid_argument("chain: init has wrong length");
    state = *cfg.init;
  } else {
    state = Eigen::VectorXd::Zero(p);
  }
  Eigen::VectorXd m = A * state;

  PosteriorSampleSet out;
  out.config = cfg;
  out.draws.resize(cfg.n_samples, p);
  long long sweeps = 0;
  auto one_sweep = [&] {
    gibbs_sweep(state, m, sites, A, c, rng, cfg.sweep);
    if (++sweeps % 100 == 0) m.noalias() = A * state;  // defeat incremental drift
  };
  for (int b = 0; b < cfg.burn_in; ++b) one_sweep();
  for (int s = 0; s < cfg.n_samples; ++s) {
    for (int t = 0; t < cfg.thin; ++t) one_sweep();
    out.draws.row(s) = state;
  }
  return out;
}

ProjectionEstimate estimate_projection(const PosteriorSampleSet& samples,
                                       const Eigen::VectorXd& q) {
  if (q.size() != samples.draws.cols())
    throw std::invalid_argument("projection: q has wrong length");
  const auto n = samples.draws.rows();
  if (n < 4) throw std::invalid_argument("projection: need at least 4 draws");
  ProjectionEstimate est;
  est.draws = samples.draws * q;
  std::span<const double> view(est.draws.data(), static_cast<size_t>(n));
  const MeanVar mv = mean_var(view);
  est.mean = mv.mean;
  est.var = mv.var;
  const BatchMeans bm = batch_means_ess(view);
  est.ess = bm.ess;
  est.se_mean = bm.se_mean;
  Eigen::VectorXd sq = (est.draws.array() - mv.mean).square();
  const BatchMeans bv = batch_means_ess({sq.data(), static_cast<size_t>(n)});
  est.se_var = bv.se_mean;
  return est;
}

}  // namespace lowsnr
