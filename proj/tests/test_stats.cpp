#include <doctest.h>

#include <cmath>
#include <vector>

#include "loopsoup/rng.hpp"
#include "loopsoup/stats.hpp"

using namespace loopsoup;
using namespace loopsoup::stats;

TEST_CASE("linear fit recovers an exact line") {
  const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
  const auto f = linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.slope_stderr == doctest::Approx(0.0));
  CHECK_THROWS(linear_fit(std::vector<double>{1}, std::vector<double>{1}));
  CHECK_THROWS(linear_fit(std::vector<double>{1, 2}, std::vector<double>{1}));
}

TEST_CASE("wilson interval") {
  // 0 of 20 gives [0, z^2 / (n + z^2)].
  const auto a = wilson_interval(0, 20);
  CHECK(a.lo == doctest::Approx(0.0));
  CHECK(a.hi == doctest::Approx(1.96 * 1.96 / (20 + 1.96 * 1.96)));
  const auto b = wilson_interval(50, 100);
  CHECK((b.lo + b.hi) / 2 == doctest::Approx(0.5));
  CHECK(b.hi - b.lo == doctest::Approx(2 * 1.96 * std::sqrt(0.25 / 100 + 1.96 * 1.96 / 40000) / (1 + 1.96 * 1.96 / 100)).epsilon(1e-9));
  CHECK_THROWS(wilson_interval(3, 2));
}

TEST_CASE("chi-square survival function") {
  CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(chi_square_sf(0.0, 3) == doctest::Approx(1.0));
  CHECK(chi_square_sf(18.307038053275146, 10) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("uniform and homogeneity tests") {
  const std::vector<std::int64_t> flat{100, 100, 100, 100};
  CHECK(chi_square_uniform(flat).statistic == doctest::Approx(0.0));
  CHECK(chi_square_uniform(flat).dof == 3);
  const std::vector<std::int64_t> skew{400, 0, 0, 0};
  CHECK(chi_square_uniform(skew).p_value < 1e-10);
  CHECK(chi_square_homogeneity(flat, flat).p_value == doctest::Approx(1.0));
  CHECK(chi_square_homogeneity(flat, skew).p_value < 1e-10);
  const std::vector<std::int64_t> z1{10, 0, 5}, z2{20, 0, 10};
  CHECK(chi_square_homogeneity(z1, z2).dof == 1);
}

TEST_CASE("two-sample test: same law passes, shifted law fails") {
  Stream rng(3);
  std::vector<std::int64_t> a, b, c;
  for (int i = 0; i < 4000; ++i) {
    a.push_back(static_cast<std::int64_t>(rng.uniform() * 10));
    b.push_back(static_cast<std::int64_t>(rng.uniform() * 10));
    c.push_back(static_cast<std::int64_t>(rng.uniform() * 10) + (rng.uniform() < 0.3));
  }
  CHECK(two_sample_chi_square(a, b).p_value > 0.001);
  CHECK(two_sample_chi_square(a, c).p_value < 1e-6);
  // Constant samples leave nothing to test.
  const std::vector<std::int64_t> k(50, 7);
  CHECK(two_sample_chi_square(k, k).p_value == doctest::Approx(1.0));
}

TEST_CASE("poisson cell test") {
  std::vector<std::int64_t> a(40, 25), b(40, 25), c(40, 40);
  CHECK(poisson_cells_test(a, b).p_value == doctest::Approx(1.0));
  CHECK(poisson_cells_test(a, c).p_value < 1e-6);
  CHECK_THROWS(poisson_cells_test(a, std::vector<std::int64_t>(3, 1)));
}
