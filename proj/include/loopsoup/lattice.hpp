#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace loopsoup {

struct Point {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(const Point&, const Point&) = default;
  // Lexicographic: x first, then y.
  friend constexpr auto operator<=>(const Point&, const Point&) = default;
  constexpr Point operator+(const Point& o) const { return {x + o.x, y + o.y}; }
  constexpr Point operator-(const Point& o) const { return {x - o.x, y - o.y}; }
};

enum class Dir : std::uint8_t { E = 0, N = 1, W = 2, S = 3 };

constexpr std::array<Point, 4> kDirStep{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
constexpr std::array<char, 4> kDirChar{'E', 'N', 'W', 'S'};

constexpr Point step_of(Dir d) { return kDirStep[static_cast<int>(d)]; }
constexpr char to_char(Dir d) { return kDirChar[static_cast<int>(d)]; }

inline Dir dir_from_char(char c) {
  switch (c) {
    case 'E': return Dir::E;
    case 'N': return Dir::N;
    case 'W': return Dir::W;
    case 'S': return Dir::S;
    default: throw std::invalid_argument(std::string("bad direction character '") + c + "'");
  }
}

struct BBox {
  Point lo{0, 0};
  Point hi{-1, -1};  // inclusive; empty when hi < lo

  bool empty() const { return hi.x < lo.x || hi.y < lo.y; }
  int width() const { return empty() ? 0 : hi.x - lo.x + 1; }
  int height() const { return empty() ? 0 : hi.y - lo.y + 1; }
  void add(Point p) {
    if (empty()) {
      lo = hi = p;
      return;
    }
    if (p.x < lo.x) lo.x = p.x;
    if (p.y < lo.y) lo.y = p.y;
    if (p.x > hi.x) hi.x = p.x;
    if (p.y > hi.y) hi.y = p.y;
  }
  bool contains(Point p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
  bool contains(const BBox& o) const { return o.empty() || (!empty() && contains(o.lo) && contains(o.hi)); }
  friend bool operator==(const BBox&, const BBox&) = default;
};

// Rectangular lattice domain {x0..x0+W-1} x {y0..y0+H-1}. A rectangle is
// always connected as a grid graph, so only non-emptiness is checked.
class LatticeDomain {
public:
  LatticeDomain() = default;
  LatticeDomain(int width, int height, double mesh = 1.0, Point offset = {0, 0})
      : w_(width), h_(height), mesh_(mesh), off_(offset) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("lattice domain must be non-empty");
    if (!(mesh > 0.0)) throw std::invalid_argument("mesh must be positive");
  }

  int width() const { return w_; }
  int height() const { return h_; }
  double mesh() const { return mesh_; }
  Point offset() const { return off_; }
  std::size_t size() const { return static_cast<std::size_t>(w_) * static_cast<std::size_t>(h_); }

  bool contains(Point p) const {
    return p.x >= off_.x && p.x < off_.x + w_ && p.y >= off_.y && p.y < off_.y + h_;
  }
  bool contains(const LatticeDomain& o) const {
    return o.off_.x >= off_.x && o.off_.y >= off_.y && o.off_.x + o.w_ <= off_.x + w_ &&
           o.off_.y + o.h_ <= off_.y + h_;
  }

  // Row-major index; caller guarantees contains(p).
  std::size_t index(Point p) const {
    return static_cast<std::size_t>(p.y - off_.y) * static_cast<std::size_t>(w_) +
           static_cast<std::size_t>(p.x - off_.x);
  }
  Point point(std::size_t idx) const {
    return {off_.x + static_cast<int>(idx % static_cast<std::size_t>(w_)),
            off_.y + static_cast<int>(idx / static_cast<std::size_t>(w_))};
  }

  // Site on the outermost ring of the rectangle.
  bool on_edge(Point p) const {
    return p.x == off_.x || p.y == off_.y || p.x == off_.x + w_ - 1 || p.y == off_.y + h_ - 1;
  }

  BBox bbox() const { return {off_, {off_.x + w_ - 1, off_.y + h_ - 1}}; }

  friend bool operator==(const LatticeDomain&, const LatticeDomain&) = default;

private:
  int w_ = 1;
  int h_ = 1;
  double mesh_ = 1.0;
  Point off_{0, 0};
};

}  // namespace loopsoup
