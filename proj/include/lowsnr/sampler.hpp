#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "lowsnr/prior.hpp"
#include "lowsnr/rng.hpp"

namespace lowsnr {

struct ChainConfig {
  int burn_in = 500;
  int n_samples = 1000;
  int thin = 1;
  enum class Sweep { Sequential, RandomScan };
  Sweep sweep = Sweep::Sequential;
  std::uint64_t seed = 1;
  const Eigen::VectorXd* init = nullptr;  // default zeros
};

/// One systematic (or random-scan) Gibbs sweep. m must hold A*state on entry
/// and is updated incrementally.
void gibbs_sweep(Eigen::VectorXd& state, Eigen::VectorXd& m, const std::vector<SitePtr>& sites,
                 const Eigen::MatrixXd& A, const Eigen::VectorXd& c, Rng& rng,
                 ChainConfig::Sweep sweep);

struct PosteriorSampleSet {
  Eigen::MatrixXd draws;  // n_samples x p
  ChainConfig config;
};

/// Runs a Gibbs chain; the local-field cache is recomputed from scratch every
/// 100 sweeps to stop drift.
PosteriorSampleSet run_chain(const std::vector<SitePtr>& sites, const Eigen::MatrixXd& A,
                             const Eigen::VectorXd& c, const ChainConfig& cfg);

struct ProjectionEstimate {
  double mean = 0;
  double var = 0;
  double ess = 0;
  double se_mean = 0;   // batch means, accounts for autocorrelation
  double se_var = 0;    // batch means over centered squares
  Eigen::VectorXd draws;
};

ProjectionEstimate estimate_projection(const PosteriorSampleSet& samples,
                                       const Eigen::VectorXd& q);

}  // namespace lowsnr
