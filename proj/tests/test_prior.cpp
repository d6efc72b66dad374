#include "lowsnr/prior.hpp"
#include <stdexcept>

#include <cmath>
#include <vector>

#include "doctest.h"
#include "lowsnr/rng.hpp"

using namespace lowsnr;

namespace {
// frozen reference values, 30-digit arithmetic
constexpr double kLogCosh1 = 0.4337808304830272;
constexpr double kLogSinh2Over2 = 0.5952201920542228;
constexpr double kTanh07 = 0.6043677771171635;
constexpr double kCoth1Minus1 = 0.3130352854993313;
constexpr double kUnifMeanD1T2 = 0.489950486756016;
constexpr double kUnifVarD1T2 = 0.173452904924122;
}  // namespace

TEST_CASE("rademacher site: tilt cancels, log-mgf is log cosh") {
  for (const double d : {0.0, 0.6, 2.5}) {
    const TiltedSite site(PriorMeasure::preset("rademacher"), d);
    CHECK(site.log_mgf(1.0) == doctest::Approx(kLogCosh1).epsilon(1e-13));
    CHECK(site.tilt_mean(0.7) == doctest::Approx(kTanh07).epsilon(1e-13));
    const double t = std::tanh(0.7);
    CHECK(site.tilt_var(0.7) == doctest::Approx(1.0 - t * t).epsilon(1e-12));
  }
}

TEST_CASE("uniform site at d=0 matches sinh/theta closed forms") {
  const TiltedSite site(PriorMeasure::preset("uniform"), 0.0);
  CHECK(site.log_mgf(2.0) == doctest::Approx(kLogSinh2Over2).epsilon(1e-11));
  CHECK(site.tilt_mean(1.0) == doctest::Approx(kCoth1Minus1).epsilon(1e-11));
  CHECK(site.log_mgf(0.0) == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("uniform site at d=1, theta=2: frozen gaussian-tilt moments") {
  const TiltedSite site(PriorMeasure::preset("uniform"), 1.0);
  CHECK(site.tilt_mean(2.0) == doctest::Approx(kUnifMeanD1T2).epsilon(1e-9));
  CHECK(site.tilt_var(2.0) == doctest::Approx(kUnifVarD1T2).epsilon(1e-9));
}

TEST_CASE("three-point and spike-slab sites match atom closed forms") {
  {
    const TiltedSite site(PriorMeasure::preset("three_point"), 0.8);
    const double w = std::exp(-0.4);
    const double theta = 1.3;
    const double psi = std::log(1.0 + 2.0 * w * std::cosh(theta)) - std::log(1.0 + 2.0 * w);
    const double mean = 2.0 * w * std::sinh(theta) / (1.0 + 2.0 * w * std::cosh(theta));
    CHECK(site.log_mgf(theta) == doctest::Approx(psi).epsilon(1e-12));
    CHECK(site.tilt_mean(theta) == doctest::Approx(mean).epsilon(1e-12));
  }
  {
    const TiltedSite site(PriorMeasure::preset("spike_slab_base"), 0.3);
    const double w = std::exp(-0.15);
    const double theta = -0.9;
    const double mean = w * std::sinh(theta) / (1.0 + w * std::cosh(theta));
    const double e2 = w * std::cosh(theta) / (1.0 + w * std::cosh(theta));
    CHECK(site.tilt_mean(theta) == doctest::Approx(mean).epsilon(1e-12));
    CHECK(site.tilt_var(theta) == doctest::Approx(e2 - mean * mean).epsilon(1e-12));
  }
}

TEST_CASE("finite differences confirm the derivative identities") {
  const double h = 1e-4;
  for (const char* name : {"uniform", "rademacher", "three_point", "spike_slab_base"}) {
    for (const double d : {0.0, 1.0}) {
      const TiltedSite site(PriorMeasure::preset(name), d);
      for (const double theta : {-3.0, -1.0, 0.0, 1.0, 3.0}) {
        const double up = site.log_mgf(theta + h);
        const double dn = site.log_mgf(theta - h);
        const double mid = site.log_mgf(theta);
        CHECK(site.tilt_mean(theta) == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
        CHECK(site.tilt_var(theta) ==
              doctest::Approx((up - 2 * mid + dn) / (h * h)).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("mean stays in (-1,1), variance in (0,1], mean increasing") {
  for (const char* name : {"uniform", "rademacher", "three_point", "spike_slab_base"}) {
    const TiltedSite site(PriorMeasure::preset(name), 0.7);
    double prev = -2.0;
    for (double theta = -8.0; theta <= 8.0; theta += 0.25) {
      const double m = site.tilt_mean(theta);
      const double v = site.tilt_var(theta);
      CHECK(m > -1.0);
      CHECK(m < 1.0);
      CHECK(v > 0.0);
      CHECK(v <= 1.0 + 1e-12);
      CHECK(m > prev);  // psi'' > 0
      prev = m;
    }
  }
}

TEST_CASE("symmetric bases give odd mean and even variance") {
  for (const char* name : {"uniform", "rademacher", "three_point", "spike_slab_base"}) {
    const TiltedSite site(PriorMeasure::preset(name), 0.4);
    CHECK(site.symmetric());
    for (const double theta : {0.3, 1.7, 4.0}) {
      CHECK(site.tilt_mean(-theta) == doctest::Approx(-site.tilt_mean(theta)).epsilon(1e-12));
      CHECK(site.tilt_var(-theta) == doctest::Approx(site.tilt_var(theta)).epsilon(1e-12));
    }
    CHECK(site.tilt_mean(0.0) == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("degenerate point mass has zero derivatives") {
  const TiltedSite site(PriorMeasure::preset("delta0"), 1.3);
  CHECK(site.degenerate());
  for (const double theta : {-5.0, 0.0, 2.0}) {
    CHECK(site.log_mgf(theta) == 0.0);
    CHECK(site.tilt_mean(theta) == 0.0);
    CHECK(site.tilt_var(theta) == 0.0);
  }
}

TEST_CASE("doubling the grid moves continuous-part answers by < 1e-10") {
  const PriorMeasure coarse = PriorMeasure::preset("uniform");
  const PriorMeasure fine =
      PriorMeasure::from_density(Eigen::VectorXd::Constant(401, 0.5), 401);
  for (const double d : {0.0, 1.0}) {
    const TiltedSite a(coarse, d), b(fine, d);
    for (const double theta : {0.5, 2.0}) {
      CHECK(a.log_mgf(theta) == doctest::Approx(b.log_mgf(theta)).epsilon(1e-10));
      CHECK(a.tilt_mean(theta) == doctest::Approx(b.tilt_mean(theta)).epsilon(1e-10));
      CHECK(a.tilt_var(theta) == doctest::Approx(b.tilt_var(theta)).epsilon(1e-10));
    }
  }
}

TEST_CASE("sampling the tilted uniform reproduces the quadrature moments") {
  const TiltedSite site(PriorMeasure::preset("uniform"), 1.0);
  Rng rng(20240501);
  const int n = 200000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = site.sample(2.0, rng);
    CHECK(z >= -1.0);
    CHECK(z <= 1.0);
    s1 += z;
    s2 += z * z;
  }
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  const double se = std::sqrt(kUnifVarD1T2 / n);
  CHECK(std::abs(mean - kUnifMeanD1T2) < 3.0 * se + 5e-5);  // 3 SE + O(h^2) CDF bias
  CHECK(var == doctest::Approx(kUnifVarD1T2).epsilon(0.02));
}

TEST_CASE("sampling atoms is exact") {
  {
    const TiltedSite site(PriorMeasure::preset("rademacher"), 0.5);
    Rng rng(99);
    const int n = 100000;
    int plus = 0;
    for (int i = 0; i < n; ++i) {
      const double z = site.sample(0.8, rng);
      CHECK((z == 1.0 || z == -1.0));
      if (z == 1.0) ++plus;
    }
    const double pref = std::exp(0.8) / (2.0 * std::cosh(0.8));
    CHECK(std::abs(static_cast<double>(plus) / n - pref) <
          3.0 * std::sqrt(pref * (1 - pref) / n));
  }
  {
    const TiltedSite site(PriorMeasure::preset("delta0"), 0.2);
    Rng rng(7);
    for (int i = 0; i < 100; ++i) CHECK(site.sample(3.0, rng) == 0.0);
  }
}

TEST_CASE("mixed measure splits mass between atoms and density") {
  const PriorMeasure mixed = PriorMeasure::mixed(
      {{0.0, 0.5}}, Eigen::VectorXd::Constant(kPriorGridNodes, 0.5), 0.5);
  const TiltedSite site(mixed, 0.0);
  // psi(theta) = log(1/2 + 1/2 sinh(theta)/theta)
  const double theta = 1.5;
  const double ref = std::log(0.5 + 0.5 * std::sinh(theta) / theta);
  CHECK(site.log_mgf(theta) == doctest::Approx(ref).epsilon(1e-11));
  Rng rng(3);
  int zeros = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i)
    if (site.sample(0.0, rng) == 0.0) ++zeros;
  CHECK(std::abs(zeros / static_cast<double>(n) - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("make_sites shares storage for equal tilts") {
  Eigen::VectorXd d(4);
  d << 1.0, 2.0, 1.0, 2.0;
  const auto sites = make_sites(PriorMeasure::preset("uniform"), d);
  CHECK(sites.size() == 4);
  CHECK(sites[0].get() == sites[2].get());
  CHECK(sites[1].get() == sites[3].get());
  CHECK(sites[0].get() != sites[1].get());
}

TEST_CASE("invalid measures and arguments are rejected") {
  const std::vector<PriorMeasure::Atom> outside = {{1.5, 1.0}};
  const std::vector<PriorMeasure::Atom> negative = {{0.0, -1.0}};
  const std::vector<PriorMeasure::Atom> empty;
  CHECK_THROWS_AS(PriorMeasure::from_atoms(outside), std::invalid_argument);
  CHECK_THROWS_AS(PriorMeasure::from_atoms(negative), std::invalid_argument);
  CHECK_THROWS_AS(PriorMeasure::from_atoms(empty), std::invalid_argument);
  CHECK_THROWS_AS(PriorMeasure::preset("bogus"), std::invalid_argument);
  CHECK_THROWS_AS(PriorMeasure::from_density(Eigen::VectorXd::Constant(201, -1.0)),
                  std::invalid_argument);
  const TiltedSite site(PriorMeasure::preset("uniform"), 1.0);
  CHECK_THROWS_AS(site.log_mgf(2e6), std::domain_error);
  CHECK_THROWS_AS(TiltedSite(PriorMeasure::preset("uniform"), -0.5), std::invalid_argument);
}
