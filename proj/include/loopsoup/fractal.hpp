#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "loopsoup/loop_soup.hpp"

namespace loopsoup::fractal {

// Mandelbrot fractal percolation on [0,1]^2. Each dyadic square C at level
// k >= 1 (side 2^-k, indices i, j in [0, 2^k)) carries a uniform U(C) derived
// from (seed, k, i, j); X(C) = 1 iff U(C) < p. A square is retained when it and
// all its ancestors have X = 1. Shared uniforms couple samples monotonically
// in p.
class FractalPercolation {
public:
  static constexpr int kMaxStoredDepth = 12;

  FractalPercolation(double p, int depth, std::uint64_t seed);

  double p() const { return p_; }
  int depth() const { return depth_; }
  std::uint64_t seed() const { return seed_; }

  // Level 0 is the unit square itself and is always retained.
  bool retained(int level, int i, int j) const;
  std::int64_t retained_count(int level) const;
  int side_count(int level) const { return 1 << level; }

  // Row-major retained mask at `level`, row 0 at the top (largest y).
  std::vector<std::uint8_t> mask(int level) const;

private:
  double p_;
  int depth_;
  std::uint64_t seed_;
  std::vector<std::vector<std::uint8_t>> levels_;  // levels_[k][j * 2^k + i]
};

FractalPercolation sample_fractal(double p, int depth, std::uint64_t seed);

// U(C) for the square at (level, i, j).
double square_uniform(std::uint64_t seed, int level, std::int64_t i, std::int64_t j);

// Whether some level-`depth` square is retained; depth-first with early exit,
// consistent with sample_fractal for the same seed. Works for any depth.
bool survives(double p, int depth, std::uint64_t seed);

// Smallest fixed point of q = (1 - p + p q)^4 in [0,1].
double extinction_oracle(double p);

// Left-right crossing of the union of retained closed squares at the
// deepest level (squares adjacent through an edge or a corner).
bool crossing_exists(const FractalPercolation& fp);

// Plain PBM (P1) of the mask at `level`.
void write_pbm(std::ostream& os, const FractalPercolation& fp, int level);

struct DyadicSquare {
  int level = 0;          // n
  std::int64_t j = 0;     // corner x index in units of 2^-n
  std::int64_t jp = 0;    // corner y index
  double side() const;    // 2 * 2^-n
  double x0() const;
  double y0() const;
  bool contains(double x, double y) const;
};

struct UnitPoint {
  double x = 0.0;
  double y = 0.0;
};

// Visited sites of a loop in unit-square coordinates: site (x, y) of the
// domain maps to ((x - x0 + 1) / (W + 1), (y - y0 + 1) / (H + 1)).
std::vector<UnitPoint> unit_coordinates(const Loop& loop, const LatticeDomain& domain);

// L^1 diameter: the larger of the x and y ranges.
double l1_diameter(std::span<const UnitPoint> loop);

// Square of side 2 * 2^-n containing the loop, where d in [2^-n-1, 2^-n) and
// the corner is the floor of the loop's minimal coordinates on the 2^-n grid.
// Throws when the diameter is not in (0, 1).
DyadicSquare loop_to_square(std::span<const UnitPoint> loop);

}  // namespace loopsoup::fractal
