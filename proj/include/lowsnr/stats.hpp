#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lowsnr {

/// P(N(0,1) <= x).
double normal_cdf(double x);

/// Upper tail P(N(0,1) >= x).
double normal_upper_tail(double x);

/// Two-sided quantile: the c >= 0 with P(|N(0,1)| >= c) = alpha, found by
/// bisection on erfc to 1e-12. Requires alpha in (0,1).
double normal_two_sided_quantile(double alpha);

/// log(sum_i exp(x_i)), shifted by the max; -inf for an empty span.
double log_sum_exp(std::span<const double> x);

struct WilsonInterval {
  double estimate;
  double lo;
  double hi;
};

/// Wilson score interval for a binomial proportion at confidence 1-conf_alpha.
WilsonInterval wilson_interval(std::size_t hits, std::size_t n, double conf_alpha = 0.05);

/// Sample mean and (unbiased) variance.
struct MeanVar {
  double mean;
  double var;
};
MeanVar mean_var(std::span<const double> x);

/// Effective sample size of a correlated sequence by the batch-means method
/// (sqrt(n) batches). Also reports the standard error of the mean.
struct BatchMeans {
  double ess;
  double se_mean;
};
BatchMeans batch_means_ess(std::span<const double> x);

}  // namespace lowsnr
