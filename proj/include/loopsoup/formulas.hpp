#pragma once

namespace loopsoup::formulas {

// SLE parameter of a simple CLE, restricted to (8/3, 4].
class Kappa {
public:
  explicit Kappa(double value);
  double value() const { return value_; }

private:
  double value_;
};

// Loop-soup intensity in the range (0, 1] covered by the kappa correspondence.
class Intensity {
public:
  explicit Intensity(double value);
  double value() const { return value_; }

private:
  double value_;
};

// c = (3k - 8)(6 - k) / (2k)
double c_of_kappa(double kappa);
inline double c_of_kappa(Kappa k) { return c_of_kappa(k.value()); }

// Root of 3k^2 + (2c - 26)k + 48 = 0 lying in (8/3, 4]:
// k = (13 - c - sqrt(c^2 - 26c + 25)) / 3.
double kappa_of_c(double c);
inline double kappa_of_c(Intensity c) { return kappa_of_c(c.value()); }

// Outer boundary dimension of a cluster, (37 - c - sqrt(25 + c^2 - 26c)) / 24,
// extended to c = 0 by continuity.
double boundary_dimension(double c);

// Carpet dimension, (187 - 7c + sqrt(25 + c^2 - 26c)) / 96.
double carpet_dimension(double c);

// 25 + c^2 - 26c, clamped to 0 within 1e-15 of zero.
double discriminant(double c);

}  // namespace loopsoup::formulas
