/* lowsnr: mean-field variational inference and exact sampling for
 * high-dimensional Bayesian linear regression at bounded signal-to-noise.
 *
 * C interface. All objects are opaque handles; every function returns a
 * status code and writes results through out-parameters. Strings returned
 * through char** must be released with lowsnr_string_free.
 */
#ifndef LOWSNR_H
#define LOWSNR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define LOWSNR_OK 0
#define LOWSNR_ERR_INVALID 1   /* bad argument or config */
#define LOWSNR_ERR_DOMAIN 2    /* parameter outside the valid domain */
#define LOWSNR_ERR_NOCONV 3    /* iteration failed to converge */
#define LOWSNR_ERR_IO 4        /* file read/write failure */
#define LOWSNR_ERR_INTERNAL 5

const char* lowsnr_version(void);

/* Message for the most recent failure on this thread; empty if none. */
const char* lowsnr_last_error(void);

void lowsnr_string_free(char* s);

typedef struct lowsnr_rng lowsnr_rng;
typedef struct lowsnr_prior lowsnr_prior;
typedef struct lowsnr_site lowsnr_site;
typedef struct lowsnr_design lowsnr_design;
typedef struct lowsnr_mf lowsnr_mf;

int lowsnr_rng_create(uint64_t seed, lowsnr_rng** out);
void lowsnr_rng_free(lowsnr_rng* rng);

/* name: uniform | rademacher | three_point | delta0 | spike_slab_base */
int lowsnr_prior_preset(const char* name, lowsnr_prior** out);
void lowsnr_prior_free(lowsnr_prior* prior);

/* The prior tilted by exp(-d z^2 / 2). */
int lowsnr_site_create(const lowsnr_prior* prior, double d, lowsnr_site** out);
void lowsnr_site_free(lowsnr_site* site);
int lowsnr_site_log_mgf(const lowsnr_site* site, double theta, double* out);
int lowsnr_site_tilt_mean(const lowsnr_site* site, double theta, double* out);
int lowsnr_site_tilt_var(const lowsnr_site* site, double theta, double* out);
int lowsnr_site_sample(const lowsnr_site* site, double theta, lowsnr_rng* rng, double* out);

int lowsnr_design_identity(int p, double sigma2, double gamma, lowsnr_design** out);
int lowsnr_design_anova(int p, double sigma2, double gamma, lowsnr_design** out);
/* dist: gaussian | rademacher | uniform_scaled */
int lowsnr_design_white_noise(int n, int p, const char* dist, double sigma2, double gamma,
                              uint64_t seed, lowsnr_design** out);
/* CSV with dims "n,p" on the first line. */
int lowsnr_design_from_csv(const char* path, double sigma2, double gamma, lowsnr_design** out);
void lowsnr_design_free(lowsnr_design* design);
int lowsnr_design_dims(const lowsnr_design* design, int* n, int* p);
/* Flat JSON object: alpha_p, norm2, norm_inf, norm4_lower, norm4_upper, d0,
 * homogeneity, d_min_observed. */
int lowsnr_design_diagnostics(const lowsnr_design* design, char** json_out);

/* Mean-field fixed point for the posterior built from (design, prior, y). */
int lowsnr_mf_solve(const lowsnr_design* design, const lowsnr_prior* prior, const double* y,
                    int n, lowsnr_mf** out);
void lowsnr_mf_free(lowsnr_mf* mf);
int lowsnr_mf_get_u(const lowsnr_mf* mf, double* buf, int len);
int lowsnr_mf_iterations(const lowsnr_mf* mf, int* out);
/* Credible interval for q'beta. kind: exact | nmf. lambda_p is ignored for
 * nmf. Writes center and half width. */
int lowsnr_mf_interval(const lowsnr_mf* mf, const double* q, int p, const char* kind,
                       double lambda_p, double alpha, double* center, double* half_width);

/* Runs one experiment from a JSON config. experiment: figure1 |
 * clt_whitenoise | clt_general | coverage_mc | variance_order |
 * sparse_threshold | diagnose. seed_override < 0 keeps the config seed.
 * exit_code receives 0, or 2 when diagnose finds a failed assumption.
 * report_json (optional) receives {"outputs": [...], "warnings": [...]}. */
int lowsnr_run_experiment(const char* experiment, const char* config_json, const char* out_dir,
                          long long seed_override, int threads, int* exit_code,
                          char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* LOWSNR_H */
