#include "lowsnr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lowsnr {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double normal_two_sided_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("normal_two_sided_quantile: alpha must be in (0,1)");
  // P(|N| >= c) = erfc(c/sqrt(2)) = alpha, decreasing in c.
  double lo = 0.0, hi = 40.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

WilsonInterval wilson_interval(std::size_t hits, std::size_t n, double conf_alpha) {
  if (n == 0) throw std::invalid_argument("wilson_interval: n must be positive");
  const double z = normal_two_sided_quantile(conf_alpha);
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (phat + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {phat, std::max(0.0, center - half), std::min(1.0, center + half)};
}

MeanVar mean_var(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("mean_var: empty input");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, ss / static_cast<double>(n - 1)};
}

BatchMeans batch_means_ess(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) throw std::invalid_argument("batch_means_ess: need at least 4 draws");
  const std::size_t n_batches = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  const std::size_t b = n / n_batches;
  std::vector<double> bm(n_batches);
  for (std::size_t k = 0; k < n_batches; ++k) {
    double s = 0.0;
    for (std::size_t i = k * b; i < (k + 1) * b; ++i) s += x[i];
    bm[k] = s / static_cast<double>(b);
  }
  const MeanVar all = mean_var(x.first(n_batches * b));
  const MeanVar batches = mean_var(bm);
  const double se_mean =
      batches.var > 0 ? std::sqrt(batches.var / static_cast<double>(n_batches)) : 0.0;
  double ess;
  if (batches.var > 0 && all.var > 0)
    ess = static_cast<double>(n_batches * b) * all.var / (static_cast<double>(b) * batches.var);
  else
    ess = static_cast<double>(n);
  ess = std::min(ess, static_cast<double>(n));
  return {ess, se_mean};
}

}  // namespace lowsnr
