#include <doctest.h>

#include <cmath>
#include <initializer_list>

#include "loopsoup/formulas.hpp"

using namespace loopsoup::formulas;

TEST_CASE("intensity of the simple CLE parameters") {
  CHECK(c_of_kappa(4.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c_of_kappa(3.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c_of_kappa(Kappa(4.0)) == 1.0);
  CHECK_THROWS(c_of_kappa(8.0 / 3.0));
  CHECK_THROWS(c_of_kappa(4.5));
  CHECK_THROWS(Kappa(2.0));
}

TEST_CASE("kappa of c inverts c of kappa") {
  CHECK(kappa_of_c(1.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(kappa_of_c(0.5) == doctest::Approx(3.0).epsilon(1e-15));
  for (int i = 1; i <= 100; ++i) {
    const double c = i / 100.0;
    CHECK(std::abs(c_of_kappa(kappa_of_c(c)) - c) < 1e-12);
    const double k = 8.0 / 3.0 + (4.0 - 8.0 / 3.0) * i / 100.0;
    CHECK(std::abs(kappa_of_c(c_of_kappa(k)) - k) < 1e-12);
  }
  CHECK_THROWS(kappa_of_c(0.0));
  CHECK_THROWS(kappa_of_c(1.1));
  CHECK_THROWS(Intensity(-0.1));
}

TEST_CASE("kappa solves the quadratic") {
  for (double c : {0.1, 0.37, 0.8, 1.0}) {
    const double k = kappa_of_c(c);
    CHECK(3 * k * k + (2 * c - 26) * k + 48 == doctest::Approx(0.0).scale(1.0));
    CHECK(k > 8.0 / 3.0);
    CHECK(k <= 4.0 + 1e-15);
  }
}

TEST_CASE("dimensions") {
  CHECK(carpet_dimension(1.0) == doctest::Approx(15.0 / 8.0).epsilon(1e-15));
  CHECK(boundary_dimension(0.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(boundary_dimension(1.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(carpet_dimension(0.0) == doctest::Approx(2.0).epsilon(1e-15));
  for (int i = 1; i <= 100; ++i) {
    const double c = i / 100.0;
    CHECK(std::abs(boundary_dimension(c) - (1.0 + kappa_of_c(c) / 8.0)) < 1e-12);
    const double k = kappa_of_c(c);
    CHECK(std::abs(carpet_dimension(c) - (2.0 - (8.0 - k) * (3.0 * k - 8.0) / (32.0 * k))) < 1e-12);
  }
  CHECK_THROWS(boundary_dimension(-0.01));
  CHECK_THROWS(carpet_dimension(1.01));
}

TEST_CASE("discriminant clamps rounding noise at c = 1") {
  CHECK(discriminant(1.0) == 0.0);
  CHECK(discriminant(0.0) == 25.0);
  CHECK(discriminant(1.0 - 1e-17) == 0.0);
}
