#include "lowsnr.h"

#include <cstring>
#include <string>

#include "json.hpp"
#include "lowsnr/csv.hpp"
#include "lowsnr/design.hpp"
#include "lowsnr/experiments.hpp"
#include "lowsnr/meanfield.hpp"
#include "lowsnr/model.hpp"
#include "lowsnr/prior.hpp"
#include "lowsnr/rng.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LOWSNR_OK;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return LOWSNR_ERR_INVALID;
  } catch (const std::domain_error& e) {
    g_last_error = e.what();
    return LOWSNR_ERR_DOMAIN;
  } catch (const lowsnr::MeanFieldNonConvergence& e) {
    g_last_error = e.what();
    return LOWSNR_ERR_NOCONV;
  } catch (const std::runtime_error& e) {
    g_last_error = e.what();
    return g_last_error.rfind("csv:", 0) == 0 ? LOWSNR_ERR_IO : LOWSNR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LOWSNR_ERR_INTERNAL;
  }
}

int require(bool ok, const char* message) {
  if (ok) return LOWSNR_OK;
  g_last_error = message;
  return LOWSNR_ERR_INVALID;
}

}  // namespace

struct lowsnr_rng {
  lowsnr::Rng rng;
};
struct lowsnr_prior {
  lowsnr::PriorMeasure prior;
};
struct lowsnr_site {
  lowsnr::TiltedSite site;
};
struct lowsnr_design {
  lowsnr::DesignBundle bundle;
};
struct lowsnr_mf {
  lowsnr::MeanFieldSolution solution;
  std::vector<lowsnr::SitePtr> sites;
  Eigen::VectorXd c;
};

extern "C" {

const char* lowsnr_version(void) { return "1.0.0"; }

const char* lowsnr_last_error(void) { return g_last_error.c_str(); }

void lowsnr_string_free(char* s) { delete[] s; }

int lowsnr_rng_create(uint64_t seed, lowsnr_rng** out) {
  if (int rc = require(out != nullptr, "rng: null output pointer")) return rc;
  return guarded([&] { *out = new lowsnr_rng{lowsnr::Rng(seed)}; });
}

void lowsnr_rng_free(lowsnr_rng* rng) { delete rng; }

int lowsnr_prior_preset(const char* name, lowsnr_prior** out) {
  if (int rc = require(name && out, "prior: null argument")) return rc;
  return guarded([&] { *out = new lowsnr_prior{lowsnr::PriorMeasure::preset(name)}; });
}

void lowsnr_prior_free(lowsnr_prior* prior) { delete prior; }

int lowsnr_site_create(const lowsnr_prior* prior, double d, lowsnr_site** out) {
  if (int rc = require(prior && out, "site: null argument")) return rc;
  return guarded([&] { *out = new lowsnr_site{lowsnr::TiltedSite(prior->prior, d)}; });
}

void lowsnr_site_free(lowsnr_site* site) { delete site; }

int lowsnr_site_log_mgf(const lowsnr_site* site, double theta, double* out) {
  if (int rc = require(site && out, "site: null argument")) return rc;
  return guarded([&] { *out = site->site.log_mgf(theta); });
}

int lowsnr_site_tilt_mean(const lowsnr_site* site, double theta, double* out) {
  if (int rc = require(site && out, "site: null argument")) return rc;
  return guarded([&] { *out = site->site.tilt_mean(theta); });
}

int lowsnr_site_tilt_var(const lowsnr_site* site, double theta, double* out) {
  if (int rc = require(site && out, "site: null argument")) return rc;
  return guarded([&] { *out = site->site.tilt_var(theta); });
}

int lowsnr_site_sample(const lowsnr_site* site, double theta, lowsnr_rng* rng, double* out) {
  if (int rc = require(site && rng && out, "site: null argument")) return rc;
  return guarded([&] { *out = site->site.sample(theta, rng->rng); });
}

int lowsnr_design_identity(int p, double sigma2, double gamma, lowsnr_design** out) {
  if (int rc = require(out != nullptr, "design: null output pointer")) return rc;
  return guarded(
      [&] { *out = new lowsnr_design{lowsnr::build_gaussian_sequence(p, sigma2, gamma)}; });
}

int lowsnr_design_anova(int p, double sigma2, double gamma, lowsnr_design** out) {
  if (int rc = require(out != nullptr, "design: null output pointer")) return rc;
  return guarded([&] { *out = new lowsnr_design{lowsnr::build_anova(p, sigma2, gamma)}; });
}

int lowsnr_design_white_noise(int n, int p, const char* dist, double sigma2, double gamma,
                              uint64_t seed, lowsnr_design** out) {
  if (int rc = require(dist && out, "design: null argument")) return rc;
  return guarded([&] {
    lowsnr::Rng rng(seed);
    *out = new lowsnr_design{lowsnr::build_white_noise(
        n, p, lowsnr::white_noise_dist_from_string(dist), sigma2, rng, gamma)};
  });
}

int lowsnr_design_from_csv(const char* path, double sigma2, double gamma, lowsnr_design** out) {
  if (int rc = require(path && out, "design: null argument")) return rc;
  return guarded([&] {
    *out = new lowsnr_design{
        lowsnr::build_from_matrix(lowsnr::read_matrix_csv(path), sigma2, gamma)};
  });
}

void lowsnr_design_free(lowsnr_design* design) { delete design; }

int lowsnr_design_dims(const lowsnr_design* design, int* n, int* p) {
  if (int rc = require(design && n && p, "design: null argument")) return rc;
  *n = design->bundle.n;
  *p = design->bundle.p;
  return LOWSNR_OK;
}

int lowsnr_design_diagnostics(const lowsnr_design* design, char** json_out) {
  if (int rc = require(design && json_out, "design: null argument")) return rc;
  return guarded([&] {
    const lowsnr::DesignDiagnostics d = lowsnr::design_diagnostics(design->bundle);
    nlohmann::json j;
    j["alpha_p"] = d.alpha_p;
    j["norm2"] = d.norm2;
    j["norm_inf"] = d.norm_inf;
    j["norm4_lower"] = d.norm4_lower;
    j["norm4_upper"] = d.norm4_upper;
    j["d0"] = d.d0;
    j["homogeneity"] = d.homogeneity;
    j["d_min_observed"] = d.d_min_observed;
    *json_out = dup_string(j.dump());
  });
}

int lowsnr_mf_solve(const lowsnr_design* design, const lowsnr_prior* prior, const double* y,
                    int n, lowsnr_mf** out) {
  if (int rc = require(design && prior && y && out, "mf: null argument")) return rc;
  if (int rc = require(n == design->bundle.n, "mf: y has wrong length")) return rc;
  return guarded([&] {
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y, n);
    auto mf = std::make_unique<lowsnr_mf>();
    mf->c = lowsnr::posterior_field(design->bundle, yv);
    mf->sites = lowsnr::make_sites(prior->prior, design->bundle.d);
    mf->solution = lowsnr::solve_fixed_point(mf->sites, design->bundle.A, mf->c);
    *out = mf.release();
  });
}

void lowsnr_mf_free(lowsnr_mf* mf) { delete mf; }

int lowsnr_mf_get_u(const lowsnr_mf* mf, double* buf, int len) {
  if (int rc = require(mf && buf, "mf: null argument")) return rc;
  if (int rc = require(len == mf->solution.u.size(), "mf: buffer has wrong length")) return rc;
  Eigen::Map<Eigen::VectorXd>(buf, len) = mf->solution.u;
  return LOWSNR_OK;
}

int lowsnr_mf_iterations(const lowsnr_mf* mf, int* out) {
  if (int rc = require(mf && out, "mf: null argument")) return rc;
  *out = mf->solution.iterations;
  return LOWSNR_OK;
}

int lowsnr_mf_interval(const lowsnr_mf* mf, const double* q, int p, const char* kind,
                       double lambda_p, double alpha, double* center, double* half_width) {
  if (int rc = require(mf && q && kind && center && half_width, "mf: null argument")) return rc;
  if (int rc = require(p == mf->solution.u.size(), "mf: q has wrong length")) return rc;
  return guarded([&] {
    const Eigen::VectorXd qv = Eigen::Map<const Eigen::VectorXd>(q, p);
    const double ups = lowsnr::upsilon_p(qv, mf->sites, mf->c);
    const std::string k = kind;
    lowsnr::CredibleInterval iv;
    if (k == "exact")
      iv = lowsnr::exact_interval(mf->solution, qv, ups, lambda_p, alpha);
    else if (k == "nmf")
      iv = lowsnr::nmf_interval(mf->solution, qv, ups, alpha);
    else
      throw std::invalid_argument("mf: interval kind must be 'exact' or 'nmf'");
    *center = iv.center;
    *half_width = iv.half_width;
  });
}

int lowsnr_run_experiment(const char* experiment, const char* config_json, const char* out_dir,
                          long long seed_override, int threads, int* exit_code,
                          char** report_json) {
  if (int rc = require(config_json && out_dir && exit_code, "experiment: null argument"))
    return rc;
  return guarded([&] {
    const lowsnr::ExperimentConfig cfg = lowsnr::parse_experiment_config(
        config_json, experiment ? experiment : "", seed_override);
    const lowsnr::RunResult result =
        lowsnr::run_experiment(cfg, out_dir, threads < 1 ? 1 : threads);
    *exit_code = result.exit_code;
    if (report_json) {
      nlohmann::json j;
      j["outputs"] = result.outputs;
      j["warnings"] = result.warnings;
      j["config_hash"] = cfg.config_hash;
      *report_json = dup_string(j.dump());
    }
  });
}

}  // extern "C"
