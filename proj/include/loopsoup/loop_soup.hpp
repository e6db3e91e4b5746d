#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "loopsoup/lattice.hpp"
#include "loopsoup/rng.hpp"

namespace loopsoup {

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

// Largest step count for which the return probability is computed exactly.
inline constexpr int kExactReturnMax = 16;

// P(simple random walk on Z^2 is back at its start after n steps), in lowest
// terms. Throws for n > kExactReturnMax.
Rational exact_return_probability(int n);

// Same probability as a double; exact rational evaluation up to n = 16,
// floating point product formula beyond.
double return_probability(int n);

// Rooted per-site loop intensities lambda_{2n} = q_{2n} / (2n) for all
// even lengths up to max_len, plus the cumulative table used for sampling
// lengths.
class LoopMassTable {
public:
  explicit LoopMassTable(int max_len);

  int max_len() const { return max_len_; }
  // Entries are indexed by half-length: entry k describes length 2(k+1).
  std::size_t size() const { return q_.size(); }
  int length_at(std::size_t k) const { return 2 * static_cast<int>(k + 1); }
  double q(int len) const { return q_.at(half_index(len)); }
  double lambda(int len) const { return lambda_.at(half_index(len)); }
  const std::vector<double>& lambdas() const { return lambda_; }
  // Sum of lambda over all lengths: total rooted loop intensity per site at c = 1.
  double total() const { return cumulative_.back(); }

  // Length drawn with probability lambda_{2n} / total() given u in [0,1).
  int draw_length(double u) const;

private:
  std::size_t half_index(int len) const;

  int max_len_;
  std::vector<double> q_;
  std::vector<double> lambda_;
  std::vector<double> cumulative_;
};

inline LoopMassTable build_mass_table(int max_len) { return LoopMassTable(max_len); }

struct Loop {
  Point root;
  std::vector<Dir> steps;
  // Arrival time of the loop in the layered construction: the loop belongs
  // to the soup at every intensity >= arrival.
  double arrival = 0.0;

  int length() const { return static_cast<int>(steps.size()); }

  // Calls f on every visited site in walk order, starting (and not repeating
  // at the end) with the root.
  template <class F>
  void for_each_site(F&& f) const {
    Point p = root;
    f(p);
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
      p = p + step_of(steps[i]);
      f(p);
    }
  }

  Point displacement() const;
  bool inside(const LatticeDomain& d) const;
  BBox bbox() const;
  friend bool operator==(const Loop&, const Loop&) = default;
};

// Uniform rooted closed walk of the given even length. Sequential sampling in
// the rotated coordinates u = x + y, v = x - y, where a closed walk is a pair of
// independent +-1 bridges and the number of closing completions factorizes.
Loop sample_bridge(Point root, int length, Stream& rng);

struct LoopSoup {
  std::vector<Loop> loops;
  double intensity_c = 0.0;
  LatticeDomain domain;
  int max_len = 2;
  std::uint64_t seed = 0;

  // Sub-soup of loops with arrival <= c. Requires c <= intensity_c.
  LoopSoup at_intensity(double c) const;
};

// Poisson loop soup on the domain. Each site x draws Poisson(c * total) loops
// from its own stream, with lengths from the mass table and arrival times
// uniform in [0, c]; each loop's steps come from a per-(site, k) stream. Loops
// leaving the domain are discarded. Streams are keyed by absolute site
// coordinates, so sampling a sub-rectangle with the same seed yields exactly
// the restriction of the larger soup.
LoopSoup sample_soup(const LatticeDomain& domain, double c, int max_len, std::uint64_t seed);
LoopSoup sample_soup(const LatticeDomain& domain, double c, const LoopMassTable& table, std::uint64_t seed);

LoopSoup restrict_soup(const LoopSoup& soup, const LatticeDomain& sub);
LoopSoup superpose(const LoopSoup& a, const LoopSoup& b);

// Text format: header `#soup c=.. W=.. H=.. mesh=.. maxlen=.. seed=..`
// (plus ` x0=.. y0=..` for offset domains), then one `x y DIRS` line per loop.
void write_soup(std::ostream& os, const LoopSoup& soup);
LoopSoup read_soup(std::istream& is);

// Default max_len for a domain: 2*W*H rounded to even, capped.
int default_max_len(const LatticeDomain& d, int cap = 4096);

std::string format_double(double v);

}  // namespace loopsoup
