#include "lowsnr/experiments.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "lowsnr/asymptotics.hpp"
#include "lowsnr/csv.hpp"
#include "lowsnr/stats.hpp"
#include "parallel.hpp"

namespace lowsnr {

using nlohmann::json;

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "figure1") return ExperimentKind::Figure1;
  if (s == "clt_whitenoise") return ExperimentKind::CltWhiteNoise;
  if (s == "clt_general") return ExperimentKind::CltGeneral;
  if (s == "coverage_mc") return ExperimentKind::CoverageMc;
  if (s == "variance_order") return ExperimentKind::VarianceOrder;
  if (s == "sparse_threshold") return ExperimentKind::SparseThreshold;
  if (s == "diagnose") return ExperimentKind::Diagnose;
  throw std::invalid_argument("config: unknown experiment '" + s + "'");
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Figure1: return "figure1";
    case ExperimentKind::CltWhiteNoise: return "clt_whitenoise";
    case ExperimentKind::CltGeneral: return "clt_general";
    case ExperimentKind::CoverageMc: return "coverage_mc";
    case ExperimentKind::VarianceOrder: return "variance_order";
    case ExperimentKind::SparseThreshold: return "sparse_threshold";
    case ExperimentKind::Diagnose: return "diagnose";
  }
  return "?";
}

namespace {

constexpr int kDeskScaleMaxP = 1000;

void require_fields(const json& j, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw std::invalid_argument("config: unknown field '" + where + "." + key + "'");
  }
}

double num_field(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    throw std::invalid_argument("config: field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

PriorMeasure parse_prior(const json& j, std::string& name_out) {
  if (j.is_string()) {
    name_out = j.get<std::string>();
    return PriorMeasure::preset(name_out);
  }
  if (!j.is_object()) throw std::invalid_argument("config: 'prior' must be an object or name");
  require_fields(j, "prior", {"name", "atoms", "uniform_mass"});
  if (j.contains("name")) {
    name_out = j.at("name").get<std::string>();
    return PriorMeasure::preset(name_out);
  }
  if (!j.contains("atoms"))
    throw std::invalid_argument("config: 'prior' needs a name or an atom list");
  std::vector<PriorMeasure::Atom> atoms;
  for (const auto& a : j.at("atoms")) {
    if (!a.is_array() || a.size() != 2)
      throw std::invalid_argument("config: 'prior.atoms' entries must be [loc, weight]");
    atoms.push_back({a[0].get<double>(), a[1].get<double>()});
  }
  name_out = "custom";
  const double um = num_field(j, "uniform_mass", 0.0);
  if (um > 0.0)
    return PriorMeasure::mixed(std::move(atoms),
                               Eigen::VectorXd::Constant(kPriorGridNodes, 0.5), um);
  return PriorMeasure::from_atoms(std::move(atoms));
}

TruthMeasure parse_truth_measure(const json& j) {
  if (j.is_string()) return TruthMeasure::preset(j.get<std::string>());
  if (!j.is_object())
    throw std::invalid_argument("config: truth measure must be an object or name");
  require_fields(j, "mu_star", {"name", "atoms", "gauss"});
  if (j.contains("name")) return TruthMeasure::preset(j.at("name").get<std::string>());
  TruthMeasure t;
  double mass = 0.0;
  if (j.contains("atoms"))
    for (const auto& a : j.at("atoms")) {
      t.atoms.push_back({a[0].get<double>(), a[1].get<double>()});
      mass += a[1].get<double>();
    }
  if (j.contains("gauss"))
    for (const auto& g : j.at("gauss")) {
      if (!g.is_array() || g.size() != 3)
        throw std::invalid_argument("config: 'gauss' entries must be [mean, sd, weight]");
      t.gauss.push_back({g[0].get<double>(), g[1].get<double>(), g[2].get<double>()});
      mass += g[2].get<double>();
    }
  if (!(mass > 0.0)) throw std::invalid_argument("config: truth measure has no mass");
  for (auto& a : t.atoms) a.weight /= mass;
  for (auto& g : t.gauss) g.weight /= mass;
  t.symmetric = false;
  return t;
}

DesignSpec parse_design(const json& j, ExperimentKind kind) {
  DesignSpec d;
  switch (kind) {  // defaults per experiment
    case ExperimentKind::Figure1:
    case ExperimentKind::CoverageMc:
      d.kind = DesignKind::Anova;
      d.p = 300;
      break;
    case ExperimentKind::CltGeneral:
    case ExperimentKind::VarianceOrder:
      d.kind = DesignKind::Anova;
      d.p = 200;
      break;
    case ExperimentKind::CltWhiteNoise:
      d.kind = DesignKind::Dense;
      d.n = 4000;
      d.p = 100;
      break;
    case ExperimentKind::SparseThreshold:
      d.kind = DesignKind::Dense;
      d.n = 2000;
      d.p = 60;
      break;
    case ExperimentKind::Diagnose:
      d.kind = DesignKind::Identity;
      d.p = 50;
      break;
  }
  if (j.is_null()) return d;
  require_fields(j, "design", {"kind", "n", "p", "sigma2", "gamma", "dist", "path"});
  if (j.contains("kind")) {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "identity") d.kind = DesignKind::Identity;
    else if (k == "anova") d.kind = DesignKind::Anova;
    else if (k == "white_noise") d.kind = DesignKind::Dense;
    else if (k == "csv") d.kind = DesignKind::Dense;
    else throw std::invalid_argument("config: unknown design kind '" + k + "'");
    if (k == "csv") {
      if (!j.contains("path")) throw std::invalid_argument("config: design.path required");
      d.csv_path = j.at("path").get<std::string>();
      if (!std::filesystem::exists(d.csv_path))
        throw std::invalid_argument("config: design.path '" + d.csv_path + "' does not exist");
    }
  }
  d.n = static_cast<int>(num_field(j, "n", d.n));
  d.p = static_cast<int>(num_field(j, "p", d.p));
  d.sigma2 = num_field(j, "sigma2", 1.0);
  d.gamma = num_field(j, "gamma", 1.0);
  if (j.contains("dist"))
    d.dist = white_noise_dist_from_string(j.at("dist").get<std::string>());
  if (d.csv_path.empty() && (d.p < 1 || d.p > kDeskScaleMaxP))
    throw std::invalid_argument("config: design.p must be in [1, 1000]");
  return d;
}

QSpec parse_q(const json& j) {
  QSpec q;
  if (j.is_null()) return q;
  if (j.is_string()) {
    const std::string k = j.get<std::string>();
    if (k == "uniform") q.kind = QSpec::Kind::Uniform;
    else if (k == "contrast") q.kind = QSpec::Kind::Contrast;
    else if (k == "alternating") q.kind = QSpec::Kind::Alternating;
    else throw std::invalid_argument("config: unknown q kind '" + k + "'");
    return q;
  }
  require_fields(j, "q", {"kind", "path"});
  const std::string k = j.value("kind", "uniform");
  if (k == "uniform") q.kind = QSpec::Kind::Uniform;
  else if (k == "contrast") q.kind = QSpec::Kind::Contrast;
  else if (k == "alternating") q.kind = QSpec::Kind::Alternating;
  else if (k == "custom") {
    q.kind = QSpec::Kind::Custom;
    if (!j.contains("path")) throw std::invalid_argument("config: q.path required");
    q.csv_path = j.at("path").get<std::string>();
    if (!std::filesystem::exists(q.csv_path))
      throw std::invalid_argument("config: q.path '" + q.csv_path + "' does not exist");
  } else {
    throw std::invalid_argument("config: unknown q kind '" + k + "'");
  }
  return q;
}

json design_to_json(const DesignSpec& d) {
  json j;
  switch (d.kind) {
    case DesignKind::Identity: j["kind"] = "identity"; break;
    case DesignKind::Anova: j["kind"] = "anova"; break;
    case DesignKind::Dense: j["kind"] = d.csv_path.empty() ? "white_noise" : "csv"; break;
  }
  if (d.kind == DesignKind::Dense && d.csv_path.empty()) {
    j["n"] = d.n;
    switch (d.dist) {
      case WhiteNoiseDist::Gaussian: j["dist"] = "gaussian"; break;
      case WhiteNoiseDist::Rademacher: j["dist"] = "rademacher"; break;
      case WhiteNoiseDist::UniformScaled: j["dist"] = "uniform_scaled"; break;
    }
  }
  if (!d.csv_path.empty()) j["path"] = d.csv_path;
  else j["p"] = d.p;
  j["sigma2"] = d.sigma2;
  j["gamma"] = d.gamma;
  return j;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& experiment_override,
                                         long long seed_override) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: JSON parse failure: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  require_fields(j, "config",
                 {"experiment", "seed", "alpha", "prior", "truth", "design", "q", "lambda",
                  "reps", "interval", "chain", "figure1", "diagnose"});

  ExperimentConfig cfg;
  std::string exp_name = experiment_override;
  if (exp_name.empty()) {
    if (!j.contains("experiment"))
      throw std::invalid_argument("config: missing 'experiment'");
    exp_name = j.at("experiment").get<std::string>();
  }
  cfg.experiment = experiment_kind_from_string(exp_name);

  if (seed_override >= 0)
    cfg.seed = static_cast<std::uint64_t>(seed_override);
  else if (j.contains("seed"))
    cfg.seed = j.at("seed").get<std::uint64_t>();

  cfg.alpha = num_field(j, "alpha", 0.05);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw std::invalid_argument("config: 'alpha' must be in (0,1)");

  if (j.contains("prior"))
    cfg.prior = parse_prior(j.at("prior"), cfg.prior_name);
  else if (cfg.experiment == ExperimentKind::SparseThreshold)
    cfg.prior = PriorMeasure::preset(cfg.prior_name = "spike_slab_base");
  else
    cfg.prior = PriorMeasure::preset(cfg.prior_name = "uniform");

  cfg.design = parse_design(j.contains("design") ? j.at("design") : json(), cfg.experiment);
  cfg.q = parse_q(j.contains("q") ? j.at("q") : json());

  // Truth: default iid with mu* matching the prior name when bounded.
  cfg.truth.kind = TruthConfig::Kind::Iid;
  cfg.truth.sigma2_true = cfg.design.sigma2;
  if (cfg.experiment == ExperimentKind::SparseThreshold) {
    cfg.truth.kind = TruthConfig::Kind::SpikeSlab;
    cfg.truth.spike_u = 0.75;
    cfg.truth.slab = TruthMeasure::preset(cfg.slab_name = "rademacher");
    cfg.truth_name = "spike_slab";
  } else {
    cfg.truth.mu_star = TruthMeasure::preset(
        cfg.truth_name = (cfg.prior_name == "custom" ? "uniform" : cfg.prior_name));
  }
  if (j.contains("truth")) {
    const json& t = j.at("truth");
    require_fields(t, "truth", {"kind", "mu_star", "beta", "beta_csv", "u", "slab",
                                "sigma2_true"});
    const std::string kind = t.value("kind", "iid");
    if (kind == "iid") {
      cfg.truth.kind = TruthConfig::Kind::Iid;
      if (t.contains("mu_star")) {
        cfg.truth.mu_star = parse_truth_measure(t.at("mu_star"));
        cfg.truth_name = t.at("mu_star").is_string()
                             ? t.at("mu_star").get<std::string>()
                             : t.at("mu_star").value("name", "custom");
      }
    } else if (kind == "fixed") {
      cfg.truth.kind = TruthConfig::Kind::Fixed;
      cfg.truth_name = "fixed";
      if (t.contains("beta")) {
        const auto& arr = t.at("beta");
        cfg.truth.fixed_beta.resize(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i) cfg.truth.fixed_beta(i) = arr[i];
      } else if (t.contains("beta_csv")) {
        const std::string path = t.at("beta_csv").get<std::string>();
        if (!std::filesystem::exists(path))
          throw std::invalid_argument("config: truth.beta_csv '" + path + "' does not exist");
        cfg.truth.fixed_beta = read_vector_csv(path);
      } else {
        throw std::invalid_argument("config: fixed truth needs 'beta' or 'beta_csv'");
      }
    } else if (kind == "spike_slab") {
      cfg.truth.kind = TruthConfig::Kind::SpikeSlab;
      cfg.truth.spike_u = num_field(t, "u", 0.75);
      if (!(cfg.truth.spike_u >= 0.0))
        throw std::invalid_argument("config: truth.u must be >= 0");
      if (t.contains("slab")) {
        cfg.truth.slab = parse_truth_measure(t.at("slab"));
        cfg.slab_name =
            t.at("slab").is_string() ? t.at("slab").get<std::string>() : "custom";
      } else if (cfg.truth.slab.integration_nodes().empty()) {
        cfg.truth.slab = TruthMeasure::preset(cfg.slab_name = "rademacher");
      }
      cfg.truth_name = "spike_slab";
    } else {
      throw std::invalid_argument("config: unknown truth kind '" + kind + "'");
    }
    cfg.truth.sigma2_true = num_field(t, "sigma2_true", cfg.truth.sigma2_true);
    if (!(cfg.truth.sigma2_true >= 0.0))
      throw std::invalid_argument("config: truth.sigma2_true must be >= 0");
  }
  cfg.spike_u = cfg.truth.spike_u;
  if (cfg.experiment == ExperimentKind::SparseThreshold &&
      cfg.truth.kind != TruthConfig::Kind::SpikeSlab)
    throw std::invalid_argument("config: sparse_threshold requires truth.kind = spike_slab");

  if (j.contains("lambda") && !j.at("lambda").is_string()) {
    cfg.lambda = j.at("lambda").get<double>();
    cfg.lambda_auto = false;
  } else {
    cfg.lambda = auto_lambda(cfg.design, cfg.q);
    cfg.lambda_auto = true;
  }

  cfg.reps = static_cast<int>(num_field(
      j, "reps", cfg.experiment == ExperimentKind::SparseThreshold ? 300 : 2000));
  if (cfg.reps < 1) throw std::invalid_argument("config: 'reps' must be >= 1");

  if (j.contains("interval")) {
    const std::string iv = j.at("interval").get<std::string>();
    if (iv == "exact") cfg.interval = CredibleInterval::Kind::Exact;
    else if (iv == "nmf") cfg.interval = CredibleInterval::Kind::Nmf;
    else throw std::invalid_argument("config: unknown interval '" + iv + "'");
  }

  cfg.chain.burn_in = 500;
  cfg.chain.n_samples =
      cfg.experiment == ExperimentKind::VarianceOrder ? 30000 : 10000;
  cfg.chain.thin = cfg.experiment == ExperimentKind::VarianceOrder ? 1 : 2;
  if (j.contains("chain")) {
    const json& ch = j.at("chain");
    require_fields(ch, "chain", {"burn_in", "n_samples", "thin", "sweep"});
    cfg.chain.burn_in = static_cast<int>(num_field(ch, "burn_in", cfg.chain.burn_in));
    cfg.chain.n_samples = static_cast<int>(num_field(ch, "n_samples", cfg.chain.n_samples));
    cfg.chain.thin = static_cast<int>(num_field(ch, "thin", cfg.chain.thin));
    const std::string sw = ch.value("sweep", "sequential");
    if (sw == "sequential") cfg.chain.sweep = ChainConfig::Sweep::Sequential;
    else if (sw == "random_scan") cfg.chain.sweep = ChainConfig::Sweep::RandomScan;
    else throw std::invalid_argument("config: unknown sweep '" + sw + "'");
    if (cfg.chain.n_samples < 1 || cfg.chain.burn_in < 0 || cfg.chain.thin < 1)
      throw std::invalid_argument("config: bad chain sizes");
  }

  if (j.contains("figure1")) {
    const json& f = j.at("figure1");
    require_fields(f, "figure1",
                   {"lambda_points", "lambda_min", "lambda_max", "d0", "truths",
                    "overlay_reps"});
    cfg.lambda_points = static_cast<int>(num_field(f, "lambda_points", 97));
    cfg.lambda_min = num_field(f, "lambda_min", -0.95);
    cfg.lambda_max = num_field(f, "lambda_max", 0.95);
    cfg.figure_d0 = num_field(f, "d0", 1.0);
    cfg.overlay_reps = static_cast<int>(num_field(f, "overlay_reps", 0));
    if (f.contains("truths")) {
      cfg.figure_truths.clear();
      for (const auto& t : f.at("truths")) cfg.figure_truths.push_back(t.get<std::string>());
      if (cfg.figure_truths.empty())
        throw std::invalid_argument("config: figure1.truths must be nonempty");
    }
    if (cfg.lambda_points < 2 || !(cfg.lambda_min < cfg.lambda_max) ||
        !(cfg.figure_d0 > 0.0))
      throw std::invalid_argument("config: bad figure1 grid");
  }

  if (j.contains("diagnose")) {
    const json& d = j.at("diagnose");
    require_fields(d, "diagnose", {"matrix_csv", "y_csv", "rho"});
    cfg.matrix_csv = d.value("matrix_csv", "");
    cfg.y_csv = d.value("y_csv", "");
    cfg.rho = num_field(d, "rho", 0.99);
    if (!(cfg.rho > 0.0)) throw std::invalid_argument("config: diagnose.rho must be positive");
    for (const std::string& path : {cfg.matrix_csv, cfg.y_csv})
      if (!path.empty() && !std::filesystem::exists(path))
        throw std::invalid_argument("config: file '" + path + "' does not exist");
  }

  // Canonical resolved echo (sorted keys) and its hash.
  json resolved;
  resolved["experiment"] = to_string(cfg.experiment);
  resolved["seed"] = cfg.seed;
  resolved["alpha"] = cfg.alpha;
  resolved["prior"] = cfg.prior_name;
  json truth;
  truth["sigma2_true"] = cfg.truth.sigma2_true;
  switch (cfg.truth.kind) {
    case TruthConfig::Kind::Iid:
      truth["kind"] = "iid";
      truth["mu_star"] = cfg.truth_name;
      break;
    case TruthConfig::Kind::Fixed:
      truth["kind"] = "fixed";
      truth["p"] = cfg.truth.fixed_beta.size();
      break;
    case TruthConfig::Kind::SpikeSlab:
      truth["kind"] = "spike_slab";
      truth["u"] = cfg.truth.spike_u;
      truth["slab"] = cfg.slab_name;
      break;
  }
  resolved["truth"] = truth;
  resolved["design"] = design_to_json(cfg.design);
  switch (cfg.q.kind) {
    case QSpec::Kind::Uniform: resolved["q"] = "uniform"; break;
    case QSpec::Kind::Contrast: resolved["q"] = "contrast"; break;
    case QSpec::Kind::Alternating: resolved["q"] = "alternating"; break;
    case QSpec::Kind::Custom: resolved["q"] = cfg.q.csv_path; break;
  }
  resolved["lambda"] = cfg.lambda;
  resolved["reps"] = cfg.reps;
  resolved["interval"] = cfg.interval == CredibleInterval::Kind::Exact ? "exact" : "nmf";
  resolved["chain"] = {{"burn_in", cfg.chain.burn_in},
                       {"n_samples", cfg.chain.n_samples},
                       {"thin", cfg.chain.thin},
                       {"sweep", cfg.chain.sweep == ChainConfig::Sweep::Sequential
                                     ? "sequential"
                                     : "random_scan"}};
  if (cfg.experiment == ExperimentKind::Figure1)
    resolved["figure1"] = {{"lambda_points", cfg.lambda_points},
                           {"lambda_min", cfg.lambda_min},
                           {"lambda_max", cfg.lambda_max},
                           {"d0", cfg.figure_d0},
                           {"truths", cfg.figure_truths},
                           {"overlay_reps", cfg.overlay_reps}};
  if (cfg.experiment == ExperimentKind::Diagnose)
    resolved["diagnose"] = {{"matrix_csv", cfg.matrix_csv},
                            {"y_csv", cfg.y_csv},
                            {"rho", cfg.rho}};
  cfg.resolved_json = resolved.dump(2);
  cfg.config_hash = fnv1a_hex(cfg.resolved_json);
  return cfg;
}

namespace {

std::string csv_comment(const ExperimentConfig& cfg) {
  return "config_hash=" + cfg.config_hash + " seed=" + std::to_string(cfg.seed);
}

std::filesystem::path prepare_out_dir(const std::string& out_dir) {
  std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

void write_run_json(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                    const RunResult& result) {
  json run;
  run["experiment"] = to_string(cfg.experiment);
  run["config"] = json::parse(cfg.resolved_json);
  run["config_hash"] = cfg.config_hash;
  run["seed"] = cfg.seed;
  run["exit_code"] = result.exit_code;
  run["outputs"] = result.outputs;
  run["warnings"] = result.warnings;
  std::ofstream out(dir / "run.json");
  out << run.dump(2) << "\n";
}

struct CltInstance {
  DesignBundle bundle;
  Eigen::VectorXd q;
  Eigen::VectorXd beta_star;
  Eigen::VectorXd c;
  std::vector<SitePtr> sites;
};

CltInstance make_instance(const ExperimentConfig& cfg) {
  CltInstance ins;
  Rng rng(derive_seed(cfg.seed, 0x1257));
  ins.bundle = build_design(cfg.design, rng);
  ins.q = build_q(cfg.q, ins.bundle.p);
  ins.beta_star = draw_truth(cfg.truth, ins.bundle.p, rng);
  const Eigen::VectorXd y = generate_y(ins.bundle, ins.beta_star, cfg.truth.sigma2_true, rng);
  ins.c = posterior_field(ins.bundle, y);
  ins.sites = make_sites(cfg.prior, ins.bundle.d);
  return ins;
}

}  // namespace

RunResult run_figure1(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  const auto dir = prepare_out_dir(out_dir);
  RunResult result;

  const TiltedSite psi0(cfg.prior, cfg.figure_d0);
  CsvTable table((dir / "figure1.csv").string(), csv_comment(cfg),
                 {"lambda", "exact_coverage", "nmf_coverage", "prior", "truth"});
  for (const std::string& truth_name : cfg.figure_truths) {
    const TruthMeasure mu_star = TruthMeasure::preset(truth_name);
    const AsymptoticMoments mom = compute_moments(psi0, mu_star);
    double lambda_hi = cfg.lambda_max;
    if (mom.upsilon > 0.0 && 1.0 / mom.upsilon - 1e-3 < lambda_hi) {
      lambda_hi = 1.0 / mom.upsilon - 1e-3;
      result.warnings.push_back("figure1: lambda grid truncated at " +
                                format_double(lambda_hi) + " for truth " + truth_name);
    }
    for (int k = 0; k < cfg.lambda_points; ++k) {
      const double lambda =
          cfg.lambda_min +
          (lambda_hi - cfg.lambda_min) * k / static_cast<double>(cfg.lambda_points - 1);
      const AsymptoticConstants cons = derive_constants(mom, lambda, cfg.alpha);
      const double nmf = nmf_coverage_limit(cons.upsilon, cons.tau2, cfg.alpha);
      table.add_row({format_double(lambda), format_double(cons.coverage), format_double(nmf),
                     cfg.prior_name, truth_name});
    }
  }
  result.outputs.push_back((dir / "figure1.csv").string());

  if (cfg.overlay_reps > 0) {
    CsvTable overlay((dir / "figure1_mc_overlay.csv").string(), csv_comment(cfg),
                     {"interval", "lambda", "d0", "truth", "reps", "estimate", "wilson_lo",
                      "wilson_hi", "theory"});
    std::vector<QSpec::Kind> qs;
    if (cfg.design.kind == DesignKind::Anova)
      qs = {QSpec::Kind::Uniform, QSpec::Kind::Contrast};
    else
      qs = {QSpec::Kind::Uniform};
    Rng rng(derive_seed(cfg.seed, 0xd0));
    const DesignBundle probe = build_design(cfg.design, rng);
    int stream = 1;
    for (const auto ik : {CredibleInterval::Kind::Exact, CredibleInterval::Kind::Nmf}) {
      for (const auto qk : qs) {
        CoverageJob job;
        job.design = cfg.design;
        job.prior = cfg.prior;
        job.truth = cfg.truth;
        job.q.kind = qk;
        job.lambda = auto_lambda(cfg.design, job.q);
        job.alpha = cfg.alpha;
        job.interval = ik;
        job.reps = cfg.overlay_reps;
        job.seed = derive_seed(cfg.seed, 0xfac + stream++);
        job.threads = threads;
        const CoverageReport rep = coverage_mc(job);
        overlay.add_row({ik == CredibleInterval::Kind::Exact ? "exact" : "nmf",
                         format_double(job.lambda), format_double(probe.d0), cfg.truth_name,
                         std::to_string(rep.n_reps), format_double(rep.estimate),
                         format_double(rep.wilson_lo), format_double(rep.wilson_hi),
                         format_double(rep.theory)});
      }
    }
    result.outputs.push_back((dir / "figure1_mc_overlay.csv").string());
  }
  write_run_json(dir, cfg, result);
  return result;
}

RunResult run_clt(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  (void)threads;
  const auto dir = prepare_out_dir(out_dir);
  RunResult result;
  if (cfg.experiment == ExperimentKind::CltWhiteNoise && cfg.design.kind == DesignKind::Dense &&
      cfg.design.csv_path.empty() &&
      static_cast<double>(cfg.design.p) >= std::pow(cfg.design.n, 2.0 / 3.0))
    result.warnings.push_back("clt: p >= n^(2/3); the product-measure regime is not in force");

  CltInstance ins = make_instance(cfg);
  const auto [eps_norm, q_inf] = eigenpair_residual(ins.bundle, ins.q, cfg.lambda);

  MeanFieldSolution mf = solve_fixed_point(ins.sites, ins.bundle.A, ins.c);
  const double ups = upsilon_p(ins.q, ins.sites, ins.c);
  const double denom = 1.0 - cfg.lambda * ups;
  if (!(denom > 0.0)) throw std::domain_error("clt: lambda * upsilon_p >= 1");
  const double variance = ups / denom;

  ChainConfig chain = cfg.chain;
  chain.seed = derive_seed(cfg.seed, 0xC4A1);
  const PosteriorSampleSet samples = run_chain(ins.sites, ins.bundle.A, ins.c, chain);
  const ProjectionEstimate proj = estimate_projection(samples, ins.q);

  double plugin = 0.0;
  for (int i = 0; i < ins.bundle.p; ++i)
    plugin += ins.q(i) * ins.sites[i]->tilt_mean(ins.c(i));

  struct Centering {
    const char* label;
    double value;
  };
  const Centering centerings[] = {{"mf", mf.u.dot(ins.q)},
                                  {"plugin", plugin},
                                  {"plugin_general", plugin / denom}};
  CsvTable table((dir / "clt.csv").string(), csv_comment(cfg),
                 {"centering", "ks", "n_draws", "ess", "variance", "upsilon_p", "lambda_p",
                  "eps_norm", "q_inf", "delta_gibbs", "delta_mf"});
  for (const auto& ctr : centerings) {
    std::vector<double> std_draws(proj.draws.size());
    const double sd = std::sqrt(variance);
    for (int i = 0; i < proj.draws.size(); ++i)
      std_draws[i] = (proj.draws(i) - ctr.value) / sd;
    const double ks = ks_distance(std_draws, 0.0, 1.0);
    table.add_row({ctr.label, format_double(ks), std::to_string(proj.draws.size()),
                   format_double(proj.ess), format_double(variance), format_double(ups),
                   format_double(cfg.lambda), format_double(eps_norm), format_double(q_inf),
                   format_double(proj.mean), format_double(mf.u.dot(ins.q))});
  }
  result.outputs.push_back((dir / "clt.csv").string());
  write_run_json(dir, cfg, result);
  return result;
}

RunResult run_coverage_mc(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  const auto dir = prepare_out_dir(out_dir);
  RunResult result;
  CoverageJob job;
  job.design = cfg.design;
  job.prior = cfg.prior;
  job.truth = cfg.truth;
  job.q = cfg.q;
  job.lambda = cfg.lambda;
  job.alpha = cfg.alpha;
  job.interval = cfg.interval;
  job.reps = cfg.reps;
  job.seed = cfg.seed;
  job.threads = threads;
  const CoverageReport rep = coverage_mc(job);
  CsvTable table((dir / "coverage.csv").string(), csv_comment(cfg),
                 {"interval", "lambda", "alpha", "n_reps", "failures", "hits", "estimate",
                  "wilson_lo", "wilson_hi", "theory"});
  table.add_row({cfg.interval == CredibleInterval::Kind::Exact ? "exact" : "nmf",
                 format_double(cfg.lambda), format_double(cfg.alpha),
                 std::to_string(rep.n_reps), std::to_string(rep.failures),
                 std::to_string(rep.hits), format_double(rep.estimate),
                 format_double(rep.wilson_lo), format_double(rep.wilson_hi),
                 format_double(rep.theory)});
  result.outputs.push_back((dir / "coverage.csv").string());
  write_run_json(dir, cfg, result);
  return result;
}

RunResult run_variance_order(const ExperimentConfig& cfg, const std::string& out_dir,
                             int threads) {
  (void)threads;
  const auto dir = prepare_out_dir(out_dir);
  RunResult result;
  CltInstance ins = make_instance(cfg);
  MeanFieldSolution mf = solve_fixed_point(ins.sites, ins.bundle.A, ins.c);

  ChainConfig chain = cfg.chain;
  chain.seed = derive_seed(cfg.seed, 0xC4A1);
  const PosteriorSampleSet samples = run_chain(ins.sites, ins.bundle.A, ins.c, chain);

  CsvTable table((dir / "variance_order.csv").string(), csv_comment(cfg),
                 {"q_label", "lambda", "gibbs_var", "se_var", "upsilon_p", "ratio",
                  "theory_ratio", "ess", "delta_gibbs", "delta_mf"});
  const struct {
    const char* label;
    QSpec::Kind kind;
  } cases[] = {{"uniform", QSpec::Kind::Uniform},
               {"alternating", QSpec::Kind::Alternating},
               {"contrast", QSpec::Kind::Contrast}};
  for (const auto& cs : cases) {
    QSpec qs;
    qs.kind = cs.kind;
    const Eigen::VectorXd q = build_q(qs, ins.bundle.p);
    const double lambda = auto_lambda(cfg.design, qs);
    const ProjectionEstimate proj = estimate_projection(samples, q);
    const double ups = upsilon_p(q, ins.sites, ins.c);
    const double theory = 1.0 / (1.0 - lambda * ups);
    table.add_row({cs.label, format_double(lambda), format_double(proj.var),
                   format_double(proj.se_var), format_double(ups),
                   format_double(ups > 0 ? proj.var / ups : 0.0), format_double(theory),
                   format_double(proj.ess), format_double(proj.mean),
                   format_double(mf.u.dot(q))});
  }
  result.outputs.push_back((dir / "variance_order.csv").string());
  write_run_json(dir, cfg, result);
  return result;
}

RunResult run_sparse_threshold(const ExperimentConfig& cfg, const std::string& out_dir,
                               int threads) {
  const auto dir = prepare_out_dir(out_dir);
  RunResult result;

  std::vector<double> projections(cfg.reps);
  std::atomic<int> failures{0};
  parallel_for(cfg.reps, threads, [&](int rep) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(rep)));
    const DesignBundle bundle = build_design(cfg.design, rng);
    const Eigen::VectorXd q = build_q(cfg.q, bundle.p);
    const Eigen::VectorXd beta_star = draw_truth(cfg.truth, bundle.p, rng);
    const Eigen::VectorXd y = generate_y(bundle, beta_star, cfg.truth.sigma2_true, rng);
    const Eigen::VectorXd c = posterior_field(bundle, y);
    const auto sites = make_sites(cfg.prior, bundle.d);
    try {
      const MeanFieldSolution mf = solve_fixed_point(sites, bundle.A, c);
      projections[rep] = mf.u.dot(q);
    } catch (const MeanFieldNonConvergence&) {
      projections[rep] = std::numeric_limits<double>::quiet_NaN();
      failures.fetch_add(1);
    }
  });
  std::erase_if(projections, [](double x) { return std::isnan(x); });
  if (projections.size() < 100)
    throw std::runtime_error("sparse: too few successful replications");

  Rng rng(derive_seed(cfg.seed, 0xd1a7));
  const DesignBundle probe = build_design(cfg.design, rng);
  const Eigen::VectorXd q = build_q(cfg.q, probe.p);
  const double q_tot = q.sum();
  const double zeta_p = std::pow(static_cast<double>(probe.p), -cfg.truth.spike_u) * q_tot;
  double zeta = zeta_p;
  if (cfg.q.kind == QSpec::Kind::Uniform) {
    if (cfg.truth.spike_u > 0.5) zeta = 0.0;
    else if (cfg.truth.spike_u < 0.5) zeta = std::numeric_limits<double>::infinity();
    else zeta = 1.0;
  } else if (cfg.q.kind == QSpec::Kind::Contrast ||
             cfg.q.kind == QSpec::Kind::Alternating) {
    zeta = 0.0;
  }

  const TiltedSite psi0(cfg.prior, probe.d0);
  const SparseLimit limit =
      sparse_limit(psi0, cfg.truth.slab, probe.sigma2, cfg.truth.spike_u, zeta);

  const MeanVar mv = mean_var(projections);
  const bool divergent_flag =
      limit.kind == SparseLimit::Case::Divergent ||
      (limit.var > 0 && std::abs(mv.mean) > 5.0 * std::sqrt(limit.var));
  double ks = std::numeric_limits<double>::quiet_NaN();
  if (limit.kind != SparseLimit::Case::Divergent && limit.var > 0)
    ks = ks_distance(projections, limit.mean, limit.var);

  const char* case_label = limit.kind == SparseLimit::Case::Null
                               ? "null"
                               : (limit.kind == SparseLimit::Case::Shifted ? "shifted"
                                                                           : "divergent");
  CsvTable table((dir / "sparse.csv").string(), csv_comment(cfg),
                 {"u", "p", "n", "q_tot", "zeta_p", "case", "limit_mean", "limit_var",
                  "mc_mean", "mc_var", "ks", "n_reps", "failures", "divergent_flag"});
  table.add_row({format_double(cfg.truth.spike_u), std::to_string(probe.p),
                 std::to_string(probe.n), format_double(q_tot), format_double(zeta_p),
                 case_label, format_double(limit.mean), format_double(limit.var),
                 format_double(mv.mean), format_double(mv.var), format_double(ks),
                 std::to_string(projections.size()), std::to_string(failures.load()),
                 divergent_flag ? "1" : "0"});
  result.outputs.push_back((dir / "sparse.csv").string());
  write_run_json(dir, cfg, result);
  return result;
}

RunResult run_diagnose(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  (void)threads;
  const auto dir = prepare_out_dir(out_dir);
  RunResult result;

  DesignSpec spec = cfg.design;
  if (!cfg.matrix_csv.empty()) {
    spec.kind = DesignKind::Dense;
    spec.csv_path = cfg.matrix_csv;
  }
  Rng rng(derive_seed(cfg.seed, 0xd1a9));
  const DesignBundle bundle = build_design(spec, rng);
  const DesignDiagnostics diag = design_diagnostics(bundle);

  const double smf_stat = diag.alpha_p * std::sqrt(static_cast<double>(bundle.p));
  const char* a1 = diag.norm4_upper <= cfg.rho ? "pass"
                   : (diag.norm4_lower <= cfg.rho ? "warn" : "fail");
  const char* a2 = smf_stat <= 1.0 ? "pass" : (smf_stat <= 3.0 ? "warn" : "fail");
  const char* a3 = diag.d_min_observed > 0.0 ? (diag.homogeneity <= 1.0 ? "pass" : "warn")
                                             : "fail";
  const bool failed = std::string(a1) == "fail" || std::string(a2) == "fail" ||
                      std::string(a3) == "fail";

  CsvTable table((dir / "diagnose.csv").string(), csv_comment(cfg), {"key", "value"});
  auto row = [&](const std::string& k, const std::string& v) {
    table.add_row(std::vector<std::string>{k, v});
  };
  row("n", std::to_string(bundle.n));
  row("p", std::to_string(bundle.p));
  row("alpha_p", format_double(diag.alpha_p));
  row("sqrt_p_alpha_p", format_double(smf_stat));
  row("norm2", format_double(diag.norm2));
  row("norm4_lower", format_double(diag.norm4_lower));
  row("norm4_upper", format_double(diag.norm4_upper));
  row("norm_inf", format_double(diag.norm_inf));
  row("d0", format_double(diag.d0));
  row("d_min_observed", format_double(diag.d_min_observed));
  row("homogeneity", format_double(diag.homogeneity));
  row("rho", format_double(cfg.rho));
  row("assumption1", a1);
  row("assumption2", a2);
  row("assumption3", a3);
  row("overall", failed ? "fail" : "pass");

  if (!cfg.y_csv.empty()) {
    const Eigen::VectorXd y = read_vector_csv(cfg.y_csv);
    if (y.size() != bundle.n) throw std::invalid_argument("diagnose: y has wrong length");
    const Eigen::VectorXd c = posterior_field(bundle, y);
    const auto sites = make_sites(cfg.prior, bundle.d);
    const Eigen::VectorXd q = build_q(cfg.q, bundle.p);
    const BerryEsseenReport be = berry_esseen_terms(sites, bundle.A, c, q, cfg.lambda);
    row("R1", format_double(be.R1));
    row("R2", format_double(be.R2));
    row("R3", format_double(be.R3));
    row("R4", format_double(be.R4));
    row("eps_norm", format_double(be.eps_norm));
    row("upsilon_p", format_double(be.upsilon_p));
    row("q_inf", format_double(be.q_inf));
    row("bound_rhs", format_double(be.bound_rhs));
  }

  result.outputs.push_back((dir / "diagnose.csv").string());
  result.exit_code = failed ? 2 : 0;
  if (failed) result.warnings.push_back("diagnose: at least one assumption check failed");
  write_run_json(dir, cfg, result);
  return result;
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  switch (cfg.experiment) {
    case ExperimentKind::Figure1: return run_figure1(cfg, out_dir, threads);
    case ExperimentKind::CltWhiteNoise:
    case ExperimentKind::CltGeneral: return run_clt(cfg, out_dir, threads);
    case ExperimentKind::CoverageMc: return run_coverage_mc(cfg, out_dir, threads);
    case ExperimentKind::VarianceOrder: return run_variance_order(cfg, out_dir, threads);
    case ExperimentKind::SparseThreshold: return run_sparse_threshold(cfg, out_dir, threads);
    case ExperimentKind::Diagnose: return run_diagnose(cfg, out_dir, threads);
  }
  throw std::logic_error("experiment: unreachable");
}

}  // namespace lowsnr
