#include "loopsoup/formulas.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace loopsoup::formulas {

namespace {

constexpr double kKappaMin = 8.0 / 3.0;

void check_kappa(double k) {
  if (!(k > kKappaMin && k <= 4.0)) throw std::invalid_argument("kappa must lie in (8/3, 4], got " + std::to_string(k));
}

void check_unit(double c, bool open_at_zero) {
  const bool ok = open_at_zero ? (c > 0.0 && c <= 1.0) : (c >= 0.0 && c <= 1.0);
  if (!ok) throw std::invalid_argument("intensity outside the supported range: " + std::to_string(c));
}

}  // namespace

Kappa::Kappa(double value) : value_(value) { check_kappa(value); }
Intensity::Intensity(double value) : value_(value) { check_unit(value, true); }

double c_of_kappa(double kappa) {
  check_kappa(kappa);
  return (3.0 * kappa - 8.0) * (6.0 - kappa) / (2.0 * kappa);
}

double discriminant(double c) {
  const double d = 25.0 + c * c - 26.0 * c;
  if (std::abs(d) < 1e-15) return 0.0;
  return d;
}

double kappa_of_c(double c) {
  check_unit(c, true);
  return (13.0 - c - std::sqrt(discriminant(c))) / 3.0;
}

double boundary_dimension(double c) {
  check_unit(c, false);
  return (37.0 - c - std::sqrt(discriminant(c))) / 24.0;
}

double carpet_dimension(double c) {
  check_unit(c, false);
  return (187.0 - 7.0 * c + std::sqrt(discriminant(c))) / 96.0;
}

}  // namespace loopsoup::formulas
