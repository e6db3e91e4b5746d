#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace loopsoup::capacity {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

// Closed axis-aligned box or closed segment in the closed upper half-plane.
struct Piece {
  enum class Kind { Segment, Box };
  Kind kind = Kind::Segment;
  Vec2 a;  // segment endpoint / box lower-left
  Vec2 b;  // segment endpoint / box upper-right

  static Piece segment(Vec2 a, Vec2 b);
  static Piece box(Vec2 lo, Vec2 hi);

  double distance(Vec2 z) const;
  // Smallest t in [0,1] with p + t (q - p) in the piece, or a negative value.
  double first_hit(Vec2 p, Vec2 q) const;
  double min_y() const;
  double max_y() const;
  friend bool operator==(const Piece&, const Piece&) = default;
};

// Finite union of pieces: the compact set A. Non-hull inputs (floating parts,
// enclosed regions) are accepted; is_hull() reports them.
class Hull {
public:
  Hull() = default;
  explicit Hull(std::vector<Piece> pieces);

  const std::vector<Piece>& pieces() const { return pieces_; }
  bool empty() const { return pieces_.empty(); }
  // max |z| over the set, about the origin.
  double bounding_radius() const;
  double min_x() const;
  double max_x() const;
  double min_y() const;
  double distance(Vec2 z) const;
  double first_hit(Vec2 p, Vec2 q) const;

  Hull translated(double dx) const;
  Hull scaled(double factor) const;
  Hull united(const Hull& other) const;

  // Raster check of the hull condition: every component reaches the real
  // axis and the complement in the half-plane has no bounded component.
  bool is_hull(int resolution = 256) const;

  friend bool operator==(const Hull&, const Hull&) = default;

private:
  std::vector<Piece> pieces_;
};

// Lines `seg x0 y0 x1 y1` and `box x0 y0 x1 y1`; '#' starts a comment.
Hull parse_hull(std::istream& is);
Hull parse_hull(const std::string& text);
void write_hull(std::ostream& os, const Hull& h);

// Vertical slit from (x, 0) to (x, height).
Hull slit(double height, double x = 0.0);

struct WalkParams {
  std::int64_t walks = 100000;
  // Gaussian step standard deviation near the absorbing sets; 0 means
  // step_rel * bounding radius.
  double step = 0.0;
  double step_rel = 1e-3;
  // Launch radius; 0 means start_factor * bounding radius.
  double start_radius = 0.0;
  double start_factor = 1.25;
  std::uint64_t seed = 1;
  int threads = 1;
  std::int64_t max_moves = 1000000;
};

struct CapacityEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::int64_t walks = 0;
  double step = 0.0;
  double start_radius = 0.0;
  double alpha = 1.0;
};

// Normalization: (2/pi) * launch radius * E[(Im B_tau)^alpha], which puts the
// alpha = 1 capacity of a height-y slit at y^2/4.
double calibration_constant();

// Launch radius and step actually used for a target family.
struct Geometry {
  double shift = 0.0;  // horizontal translation applied to every target
  double radius = 0.0;
  double start_radius = 0.0;
  double step = 0.0;
};

Geometry resolve_geometry(const std::vector<Hull>& targets, const WalkParams& params);

// One walk ensemble evaluated against several targets at once (common random
// numbers). values[k][w] = (Im B at the first hit of target k)^alpha, 0 when
// the walk reaches the real axis first.
struct Ensemble {
  Geometry geometry;
  double alpha = 1.0;
  std::vector<std::vector<double>> values;
  std::int64_t truncated_walks = 0;  // walks stopped by max_moves (value 0)

  CapacityEstimate estimate(std::size_t target) const;
};

Ensemble run_ensemble(const std::vector<Hull>& targets, double alpha, const WalkParams& params);

CapacityEstimate m_alpha(const Hull& a, double alpha, const WalkParams& params);

// Square [a 2^j, (a+1) 2^j] x [2^j, 2^(j+1)] of the hyperbolic tiling.
struct HyperbolicSquare {
  std::int64_t a = 0;
  int j = 0;

  double side() const;
  Hull region() const;
  // R(S) = [a 2^j, (a+1) 2^j] x [0, 2^(j+1)].
  Hull column() const;
  friend auto operator<=>(const HyperbolicSquare&, const HyperbolicSquare&) = default;
};

struct Tiling {
  std::vector<HyperbolicSquare> squares;  // sorted by (a, j)
  Hull hat;
  bool truncated = false;  // A reaches below 2^j_min; lower squares dropped
};

// Squares of the tiling meeting A. Segments and points use the half-open
// cells [a 2^j, (a+1) 2^j) x [2^j, 2^(j+1)), so each point belongs to one
// square; boxes with area take the squares their interior overlaps.
Tiling tiling_of(const Hull& a, int j_min = -12);

struct SandwichReport {
  CapacityEstimate m_a, m_hat, m_unit_square;
  double sum_squares = 0.0;
  double sum_squares_stderr = 0.0;
  double ratio_hat = 0.0;  // M(A) / M(hat A)
  double ratio_sum = 0.0;  // M(A) / sum_S M(S)
  bool hat_upper_ok = false;
  bool sum_upper_ok = false;
  bool truncated = false;
  std::size_t square_count = 0;
};

// M(A) <= M(hat A) and M(A) <= sum_S M(S), each within 3 combined standard
// errors. M(A) and M(hat A) share walks. sum_S M(S) is M([0,1] x [1,2]) times
// sum 2^(j (alpha + 1)) by translation and scaling invariance.
SandwichReport sandwich_check(const Hull& a, double alpha, const WalkParams& params, int j_min = -12);

struct MonotoneReport {
  CapacityEstimate m_a, m_b, m_union;
  std::int64_t pathwise_violations = 0;  // walks with v(A u B) > v(A) + v(B)
  bool subadditive_ok = false;           // M(A u B) <= M(A) + M(B) within 3 SE
  bool monotone_ok = false;              // M(A) <= M(B) within 3 SE (meaningful when A is inside B)
};

MonotoneReport monotonicity_subadditivity_check(const Hull& a, const Hull& b, double alpha, const WalkParams& params);

}  // namespace loopsoup::capacity
