#include "loopsoup/fractal.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "loopsoup/rng.hpp"

namespace loopsoup::fractal {

double square_uniform(std::uint64_t seed, int level, std::int64_t i, std::int64_t j) {
  const std::uint64_t h = derive_seed(seed, {static_cast<std::uint64_t>(level), static_cast<std::uint64_t>(i),
                                             static_cast<std::uint64_t>(j)});
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

namespace {

void check_p(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("retention probability must lie in [0,1]");
}

bool keep(double p, std::uint64_t seed, int level, std::int64_t i, std::int64_t j) {
  return square_uniform(seed, level, i, j) < p;
}

}  // namespace

FractalPercolation::FractalPercolation(double p, int depth, std::uint64_t seed) : p_(p), depth_(depth), seed_(seed) {
  check_p(p);
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (depth > kMaxStoredDepth) throw std::invalid_argument("stored fractal depth is limited to 12; use survives() deeper");
  levels_.resize(static_cast<std::size_t>(depth) + 1);
  levels_[0] = {1};
  for (int k = 1; k <= depth; ++k) {
    const int n = 1 << k, half = n / 2;
    auto& cur = levels_[static_cast<std::size_t>(k)];
    const auto& parent = levels_[static_cast<std::size_t>(k) - 1];
    cur.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    for (int pj = 0; pj < half; ++pj)
      for (int pi = 0; pi < half; ++pi) {
        if (!parent[static_cast<std::size_t>(pj) * half + pi]) continue;
        for (int dj = 0; dj < 2; ++dj)
          for (int di = 0; di < 2; ++di) {
            const int i = 2 * pi + di, j = 2 * pj + dj;
            cur[static_cast<std::size_t>(j) * n + i] = keep(p, seed, k, i, j);
          }
      }
  }
}

bool FractalPercolation::retained(int level, int i, int j) const {
  if (level < 0 || level > depth_) throw std::out_of_range("level outside the sampled depth");
  const int n = 1 << level;
  if (i < 0 || j < 0 || i >= n || j >= n) return false;
  return levels_[static_cast<std::size_t>(level)][static_cast<std::size_t>(j) * n + i] != 0;
}

std::int64_t FractalPercolation::retained_count(int level) const {
  if (level < 0 || level > depth_) throw std::out_of_range("level outside the sampled depth");
  std::int64_t n = 0;
  for (auto v : levels_[static_cast<std::size_t>(level)]) n += v;
  return n;
}

std::vector<std::uint8_t> FractalPercolation::mask(int level) const {
  const int n = side_count(level);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n) * n);
  for (int row = 0; row < n; ++row)
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(row) * n + i] = retained(level, i, n - 1 - row);
  return out;
}

FractalPercolation sample_fractal(double p, int depth, std::uint64_t seed) { return FractalPercolation(p, depth, seed); }

namespace {

bool survives_from(double p, int depth, std::uint64_t seed, int level, std::int64_t i, std::int64_t j) {
  if (level == depth) return true;
  for (int dj = 0; dj < 2; ++dj)
    for (int di = 0; di < 2; ++di) {
      const std::int64_t ci = 2 * i + di, cj = 2 * j + dj;
      if (keep(p, seed, level + 1, ci, cj) && survives_from(p, depth, seed, level + 1, ci, cj)) return true;
    }
  return false;
}

}  // namespace

bool survives(double p, int depth, std::uint64_t seed) {
  check_p(p);
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  return survives_from(p, depth, seed, 0, 0, 0);
}

double extinction_oracle(double p) {
  check_p(p);
  // Offspring mean 4p <= 1: the branching process dies out almost surely and
  // 1 is the smallest fixed point. Iteration from 0 would only creep towards
  // it at p = 1/4.
  if (4.0 * p <= 1.0) return 1.0;
  double q = 0.0;
  for (int it = 0; it < 100000000; ++it) {
    const double b = 1.0 - p + p * q;
    const double next = (b * b) * (b * b);
    if (std::abs(next - q) < 1e-12) return next;
    q = next;
  }
  return q;
}

bool crossing_exists(const FractalPercolation& fp) {
  const int level = fp.depth();
  const int n = fp.side_count(level);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n) * n, 0);
  std::vector<std::pair<int, int>> stack;
  for (int j = 0; j < n; ++j)
    if (fp.retained(level, 0, j)) {
      seen[static_cast<std::size_t>(j) * n] = 1;
      stack.emplace_back(0, j);
    }
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    if (i == n - 1) return true;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int a = i + di, b = j + dj;
        if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= n || b >= n) continue;
        auto& s = seen[static_cast<std::size_t>(b) * n + a];
        if (s || !fp.retained(level, a, b)) continue;
        s = 1;
        stack.emplace_back(a, b);
      }
  }
  return false;
}

void write_pbm(std::ostream& os, const FractalPercolation& fp, int level) {
  const int n = fp.side_count(level);
  const auto m = fp.mask(level);
  os << "P1\n# fractal p=" << format_double(fp.p()) << " depth=" << fp.depth() << " level=" << level
     << " seed=" << fp.seed() << "\n"
     << n << ' ' << n << '\n';
  for (int row = 0; row < n; ++row) {
    for (int i = 0; i < n; ++i) os << (i ? " " : "") << static_cast<int>(m[static_cast<std::size_t>(row) * n + i]);
    os << '\n';
  }
}

double DyadicSquare::side() const { return 2.0 * std::ldexp(1.0, -level); }
double DyadicSquare::x0() const { return std::ldexp(static_cast<double>(j), -level); }
double DyadicSquare::y0() const { return std::ldexp(static_cast<double>(jp), -level); }
bool DyadicSquare::contains(double x, double y) const {
  return x >= x0() && x <= x0() + side() && y >= y0() && y <= y0() + side();
}

std::vector<UnitPoint> unit_coordinates(const Loop& loop, const LatticeDomain& domain) {
  std::vector<UnitPoint> out;
  const double sx = 1.0 / (domain.width() + 1), sy = 1.0 / (domain.height() + 1);
  loop.for_each_site([&](Point p) {
    out.push_back({(p.x - domain.offset().x + 1) * sx, (p.y - domain.offset().y + 1) * sy});
  });
  return out;
}

double l1_diameter(std::span<const UnitPoint> loop) {
  if (loop.empty()) return 0.0;
  double lx = loop[0].x, hx = lx, ly = loop[0].y, hy = ly;
  for (const auto& q : loop) {
    lx = std::min(lx, q.x);
    hx = std::max(hx, q.x);
    ly = std::min(ly, q.y);
    hy = std::max(hy, q.y);
  }
  return std::max(hx - lx, hy - ly);
}

DyadicSquare loop_to_square(std::span<const UnitPoint> loop) {
  const double d = l1_diameter(loop);
  if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("loop diameter must lie in (0,1)");
  int e = 0;
  std::frexp(d, &e);  // d in [2^(e-1), 2^e)
  DyadicSquare s;
  s.level = -e;
  double mx = loop[0].x, my = loop[0].y;
  for (const auto& q : loop) {
    mx = std::min(mx, q.x);
    my = std::min(my, q.y);
  }
  s.j = static_cast<std::int64_t>(std::floor(std::ldexp(mx, s.level)));
  s.jp = static_cast<std::int64_t>(std::floor(std::ldexp(my, s.level)));
  return s;
}

}  // namespace loopsoup::fractal
