#include "loopsoup/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace loopsoup::stats {

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double sse = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  f.slope_stderr = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return f;
}

Interval wilson_interval(std::int64_t successes, std::int64_t n, double z) {
  if (successes < 0 || successes > n) throw std::invalid_argument("successes must lie in [0, n]");
  if (n <= 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
  return {std::max(0.0, std::min(p, centre - half)), std::min(1.0, std::max(p, centre + half))};
}

Interval mean_interval(double sum, double sum_sq, std::int64_t n, double z) {
  if (n <= 0) return {0.0, 0.0};
  const double nn = static_cast<double>(n);
  const double m = sum / nn;
  const double var = n > 1 ? std::max(0.0, (sum_sq - nn * m * m) / (nn - 1)) : 0.0;
  const double half = z * std::sqrt(var / nn);
  return {m - half, m + half};
}

double chi_square_sf(double statistic, int dof) {
  if (dof <= 0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, std::max(0.0, statistic)));
}

ChiSquareResult chi_square_uniform(std::span<const std::int64_t> counts) {
  if (counts.size() < 2) throw std::invalid_argument("chi_square_uniform needs >= 2 categories");
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  ChiSquareResult r;
  for (auto c : counts) r.statistic += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  r.dof = static_cast<int>(counts.size()) - 1;
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

ChiSquareResult chi_square_homogeneity(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("homogeneity test: column count mismatch");
  double na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    na += static_cast<double>(a[k]);
    nb += static_cast<double>(b[k]);
  }
  ChiSquareResult r;
  if (na == 0 || nb == 0) return r;
  int cols = 0;
  const double n = na + nb;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double col = static_cast<double>(a[k] + b[k]);
    if (col == 0) continue;
    ++cols;
    const double ea = col * na / n, eb = col * nb / n;
    r.statistic += (a[k] - ea) * (a[k] - ea) / ea + (b[k] - eb) * (b[k] - eb) / eb;
  }
  r.dof = std::max(0, cols - 1);
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

ChiSquareResult two_sample_chi_square(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                      std::int64_t min_bin) {
  std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> hist;
  for (auto v : a) ++hist[v].first;
  for (auto v : b) ++hist[v].second;
  std::vector<std::int64_t> ca, cb;
  std::int64_t acc_a = 0, acc_b = 0;
  for (const auto& [value, counts] : hist) {
    acc_a += counts.first;
    acc_b += counts.second;
    if (acc_a + acc_b >= min_bin) {
      ca.push_back(acc_a);
      cb.push_back(acc_b);
      acc_a = acc_b = 0;
    }
  }
  if (acc_a + acc_b > 0) {
    if (ca.empty()) {
      ca.push_back(0);
      cb.push_back(0);
    }
    ca.back() += acc_a;
    cb.back() += acc_b;
  }
  return chi_square_homogeneity(ca, cb);
}

ChiSquareResult poisson_cells_test(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                   std::int64_t min_total) {
  if (a.size() != b.size()) throw std::invalid_argument("poisson_cells_test: cell count mismatch");
  ChiSquareResult r;
  std::int64_t pa = 0, pb = 0;
  auto flush = [&] {
    const double t = static_cast<double>(pa + pb);
    const double d = static_cast<double>(pa - pb);
    r.statistic += d * d / t;
    ++r.dof;
    pa = pb = 0;
  };
  for (std::size_t k = 0; k < a.size(); ++k) {
    pa += a[k];
    pb += b[k];
    if (pa + pb >= min_total) flush();
  }
  if (pa + pb > 0) flush();
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

}  // namespace loopsoup::stats
