#include "lowsnr/stats.hpp"
#include <stdexcept>

#include <cmath>
#include <vector>

#include "doctest.h"
#include "lowsnr/rng.hpp"

using namespace lowsnr;

TEST_CASE("two-sided normal quantiles: frozen references") {
  CHECK(normal_two_sided_quantile(0.05) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(normal_two_sided_quantile(0.9) == doctest::Approx(0.125661346855074).epsilon(1e-9));
  CHECK(normal_two_sided_quantile(0.3173105078629141) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(normal_two_sided_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_two_sided_quantile(1.0), std::invalid_argument);
}

TEST_CASE("cdf and survival are consistent") {
  for (const double x : {-3.0, -0.5, 0.0, 1.2, 4.0}) {
    CHECK(normal_cdf(x) + normal_upper_tail(x) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(normal_upper_tail(-x) == doctest::Approx(normal_cdf(x)).epsilon(1e-14));
  }
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  // quantile and cdf invert each other
  const double c = normal_two_sided_quantile(0.05);
  CHECK(2.0 * normal_upper_tail(c) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("log_sum_exp is shift-stable") {
  const std::vector<double> a = {0.0, 0.0};
  CHECK(log_sum_exp(a) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const std::vector<double> b = {-1000.0, -1000.0};
  CHECK(log_sum_exp(b) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-15));
  const std::vector<double> c = {700.0, 710.0};
  CHECK(log_sum_exp(c) ==
        doctest::Approx(710.0 + std::log1p(std::exp(-10.0))).epsilon(1e-15));
  const std::vector<double> d = {-std::numeric_limits<double>::infinity(), 0.0};
  CHECK(log_sum_exp(d) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("wilson interval matches the closed formula and brackets phat") {
  const WilsonInterval w = wilson_interval(190, 200);
  CHECK(w.estimate == doctest::Approx(0.95));
  const double z = 1.959963984540054;
  const double ph = 0.95, n = 200.0;
  const double denom = 1.0 + z * z / n;
  const double center = (ph + z * z / (2 * n)) / denom;
  const double half = z * std::sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / denom;
  CHECK(w.lo == doctest::Approx(center - half).epsilon(1e-9));
  CHECK(w.hi == doctest::Approx(center + half).epsilon(1e-9));
  CHECK(w.lo > 0.0);
  CHECK(w.hi < 1.0);
  CHECK(w.lo < w.estimate);
  CHECK(w.estimate < w.hi);
  const WilsonInterval zero = wilson_interval(0, 50);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi > 0.0);
  CHECK_THROWS_AS(wilson_interval(1, 0), std::invalid_argument);
}

TEST_CASE("mean_var uses the unbiased normalizer") {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  const MeanVar mv = mean_var(x);
  CHECK(mv.mean == doctest::Approx(2.5));
  CHECK(mv.var == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
  const std::vector<double> one = {7.0};
  CHECK(mean_var(one).var == 0.0);
}

TEST_CASE("batch means detect autocorrelation") {
  Rng rng(321);
  const int n = 40000;
  std::vector<double> iid(n), ar(n);
  double state = 0.0;
  const double phi = 0.9;
  for (int i = 0; i < n; ++i) {
    iid[i] = rng.gaussian();
    state = phi * state + std::sqrt(1.0 - phi * phi) * rng.gaussian();
    ar[i] = state;
  }
  const BatchMeans bi = batch_means_ess(iid);
  const BatchMeans ba = batch_means_ess(ar);
  CHECK(bi.ess > 0.5 * n);
  CHECK(bi.ess <= n);
  // AR(1): ess/n -> (1-phi)/(1+phi) ~ 0.053
  CHECK(ba.ess < 0.25 * n);
  CHECK(ba.ess > 0.005 * n);
  CHECK(ba.se_mean > 2.0 * bi.se_mean);
  const std::vector<double> too_short = {1.0, 2.0};
  CHECK_THROWS_AS(batch_means_ess(too_short), std::invalid_argument);
}

TEST_CASE("rng determinism and moments") {
  Rng a(123), b(123), c(124);
  for (int i = 0; i < 50; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.gaussian() == b.gaussian());
  }
  bool differs = false;
  for (int i = 0; i < 50; ++i)
    if (a.raw() != c.raw()) differs = true;
  CHECK(differs);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));

  Rng r(777);
  const int n = 200000;
  double s1 = 0, s2 = 0, u1 = 0;
  for (int i = 0; i < n; ++i) {
    const double g = r.gaussian();
    s1 += g;
    s2 += g * g;
    u1 += r.uniform();
  }
  CHECK(std::abs(s1 / n) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(u1 / n == doctest::Approx(0.5).epsilon(0.01));
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = r.below(10);
    CHECK(v < 10);
  }
}
