#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace loopsoup::stats {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_stderr = 0.0;
};

// Ordinary least squares y = intercept + slope * x. Needs >= 2 points.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for a binomial proportion (z = 1.96 by default).
Interval wilson_interval(std::int64_t successes, std::int64_t n, double z = 1.96);

// Normal-approximation interval for a mean from integer sums.
Interval mean_interval(double sum, double sum_sq, std::int64_t n, double z = 1.96);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

double chi_square_sf(double statistic, int dof);

// Goodness of fit against equal expected counts.
ChiSquareResult chi_square_uniform(std::span<const std::int64_t> counts);

// 2 x K contingency homogeneity test. Columns whose pooled count is zero are
// dropped.
ChiSquareResult chi_square_homogeneity(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

// Two-sample test of equal laws for integer-valued samples: values are binned
// on the pooled sample into consecutive value ranges holding at least
// `min_bin` pooled observations, then tested with chi_square_homogeneity.
ChiSquareResult two_sample_chi_square(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                      std::int64_t min_bin = 20);

// Equal-mean test for paired Poisson cell totals from samples with equal
// replicate counts: conditional on a_k + b_k, a_k ~ Binomial(a_k + b_k, 1/2).
// Cells are pooled in order until their combined total reaches `min_total`.
ChiSquareResult poisson_cells_test(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                   std::int64_t min_total = 20);

}  // namespace loopsoup::stats
