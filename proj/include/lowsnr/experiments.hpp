#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lowsnr/design.hpp"
#include "lowsnr/diagnostics.hpp"
#include "lowsnr/model.hpp"
#include "lowsnr/prior.hpp"
#include "lowsnr/sampler.hpp"

namespace lowsnr {

enum class ExperimentKind {
  Figure1,
  CltWhiteNoise,
  CltGeneral,
  CoverageMc,
  VarianceOrder,
  SparseThreshold,
  Diagnose,
};

ExperimentKind experiment_kind_from_string(const std::string& s);
std::string to_string(ExperimentKind k);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Diagnose;
  PriorMeasure prior;
  std::string prior_name = "uniform";
  TruthConfig truth;
  std::string truth_name = "uniform";
  DesignSpec design;
  QSpec q;
  double alpha = 0.05;
  double lambda = 0;      // resolved; config may say "auto"
  bool lambda_auto = true;
  int reps = 2000;
  std::uint64_t seed = 1;
  ChainConfig chain;
  CredibleInterval::Kind interval = CredibleInterval::Kind::Exact;

  // figure1
  int lambda_points = 97;
  double lambda_min = -0.95;
  double lambda_max = 0.95;
  double figure_d0 = 1.0;
  std::vector<std::string> figure_truths = {"uniform", "gauss_mix", "three_point"};
  int overlay_reps = 0;  // 0 disables the MC overlay

  // sparse_threshold
  double spike_u = 0.75;
  std::string slab_name = "rademacher";

  // diagnose
  std::string matrix_csv;
  std::string y_csv;
  double rho = 0.99;

  std::string resolved_json;  // canonical echo, hashed into outputs
  std::string config_hash;
};

/// Parses and validates a JSON config text. experiment_override (from the CLI
/// subcommand) wins over the file's "experiment"; seed_override >= 0 wins over
/// the file's "seed". Throws std::invalid_argument with a message naming the
/// offending field.
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& experiment_override = "",
                                         long long seed_override = -1);

struct RunResult {
  int exit_code = 0;  // 2 = diagnose assumption failure
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
};

/// Runs the configured experiment, writing CSVs and run.json under out_dir.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int threads = 1);

RunResult run_figure1(const ExperimentConfig& cfg, const std::string& out_dir, int threads);
RunResult run_clt(const ExperimentConfig& cfg, const std::string& out_dir, int threads);
RunResult run_coverage_mc(const ExperimentConfig& cfg, const std::string& out_dir, int threads);
RunResult run_variance_order(const ExperimentConfig& cfg, const std::string& out_dir, int threads);
RunResult run_sparse_threshold(const ExperimentConfig& cfg, const std::string& out_dir,
                               int threads);
RunResult run_diagnose(const ExperimentConfig& cfg, const std::string& out_dir, int threads);

}  // namespace lowsnr
