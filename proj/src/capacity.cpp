#include "loopsoup/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "loopsoup/experiments.hpp"
#include "loopsoup/loop_soup.hpp"
#include "loopsoup/rng.hpp"

namespace loopsoup::capacity {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStepCorrection = 1.00255;

double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
Vec2 sub(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }

void check_point(Vec2 p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw std::invalid_argument("hull coordinates must be finite");
  if (p.y < 0.0) throw std::invalid_argument("hull pieces must lie in the closed upper half-plane");
}

}  // namespace

Piece Piece::segment(Vec2 a, Vec2 b) {
  check_point(a);
  check_point(b);
  return {Kind::Segment, a, b};
}

Piece Piece::box(Vec2 lo, Vec2 hi) {
  check_point(lo);
  check_point(hi);
  return {Kind::Box, {std::min(lo.x, hi.x), std::min(lo.y, hi.y)}, {std::max(lo.x, hi.x), std::max(lo.y, hi.y)}};
}

double Piece::distance(Vec2 z) const {
  if (kind == Kind::Box) {
    const double dx = std::max({a.x - z.x, 0.0, z.x - b.x});
    const double dy = std::max({a.y - z.y, 0.0, z.y - b.y});
    return std::hypot(dx, dy);
  }
  const Vec2 e = sub(b, a), w = sub(z, a);
  const double ee = dot(e, e);
  double t = ee > 0.0 ? dot(w, e) / ee : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(w.x - t * e.x, w.y - t * e.y);
}

double Piece::first_hit(Vec2 p, Vec2 q) const {
  const Vec2 d = sub(q, p);
  if (kind == Kind::Box) {
    // Liang-Barsky clip of the chord against the box.
    double t0 = 0.0, t1 = 1.0;
    const double pp[4] = {-d.x, d.x, -d.y, d.y};
    const double qq[4] = {p.x - a.x, b.x - p.x, p.y - a.y, b.y - p.y};
    for (int k = 0; k < 4; ++k) {
      if (pp[k] == 0.0) {
        if (qq[k] < 0.0) return -1.0;
        continue;
      }
      const double r = qq[k] / pp[k];
      if (pp[k] < 0.0)
        t0 = std::max(t0, r);
      else
        t1 = std::min(t1, r);
      if (t0 > t1) return -1.0;
    }
    return t0;
  }
  const Vec2 e = sub(b, a), ap = sub(a, p);
  const double denom = cross(d, e);
  if (denom != 0.0) {
    const double t = cross(ap, e) / denom, u = cross(ap, d) / denom;
    if (t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0) return t;
    return -1.0;
  }
  if (cross(ap, d) != 0.0) return -1.0;
  const double dd = dot(d, d);
  if (dd == 0.0) return -1.0;
  const double ta = dot(ap, d) / dd, tb = dot(sub(b, p), d) / dd;
  const double lo = std::max(0.0, std::min(ta, tb)), hi = std::min(1.0, std::max(ta, tb));
  return lo <= hi ? lo : -1.0;
}

double Piece::min_y() const { return std::min(a.y, b.y); }
double Piece::max_y() const { return std::max(a.y, b.y); }

Hull::Hull(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
  for (const auto& p : pieces_) {
    check_point(p.a);
    check_point(p.b);
  }
}

double Hull::bounding_radius() const {
  double r = 0.0;
  for (const auto& p : pieces_) {
    if (p.kind == Piece::Kind::Box) {
      for (double x : {p.a.x, p.b.x})
        for (double y : {p.a.y, p.b.y}) r = std::max(r, std::hypot(x, y));
    } else {
      r = std::max({r, std::hypot(p.a.x, p.a.y), std::hypot(p.b.x, p.b.y)});
    }
  }
  return r;
}

double Hull::min_x() const {
  double v = kInf;
  for (const auto& p : pieces_) v = std::min({v, p.a.x, p.b.x});
  return v;
}

double Hull::max_x() const {
  double v = -kInf;
  for (const auto& p : pieces_) v = std::max({v, p.a.x, p.b.x});
  return v;
}

double Hull::min_y() const {
  double v = kInf;
  for (const auto& p : pieces_) v = std::min(v, p.min_y());
  return v;
}

double Hull::distance(Vec2 z) const {
  double d = kInf;
  for (const auto& p : pieces_) d = std::min(d, p.distance(z));
  return d;
}

double Hull::first_hit(Vec2 p, Vec2 q) const {
  double best = -1.0;
  for (const auto& piece : pieces_) {
    const double t = piece.first_hit(p, q);
    if (t >= 0.0 && (best < 0.0 || t < best)) best = t;
  }
  return best;
}

Hull Hull::translated(double dx) const {
  auto out = pieces_;
  for (auto& p : out) {
    p.a.x += dx;
    p.b.x += dx;
  }
  return Hull(std::move(out));
}

Hull Hull::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be positive");
  auto out = pieces_;
  for (auto& p : out) {
    p.a = {p.a.x * factor, p.a.y * factor};
    p.b = {p.b.x * factor, p.b.y * factor};
  }
  return Hull(std::move(out));
}

Hull Hull::united(const Hull& other) const {
  auto out = pieces_;
  out.insert(out.end(), other.pieces_.begin(), other.pieces_.end());
  return Hull(std::move(out));
}

bool Hull::is_hull(int resolution) const {
  if (pieces_.empty()) return true;
  if (resolution < 8) throw std::invalid_argument("raster resolution must be >= 8");
  const double x0 = min_x(), x1 = max_x();
  double y1 = 0.0;
  for (const auto& p : pieces_) y1 = std::max(y1, p.max_y());
  const double span = std::max({x1 - x0, y1, 1e-12});
  const double h = span / resolution;
  // Two free pixels of margin on the left, right and top.
  const int nx = static_cast<int>(std::ceil((x1 - x0) / h)) + 5;
  const int ny = static_cast<int>(std::ceil(y1 / h)) + 3;
  const double ox = x0 - 2 * h;
  std::vector<std::uint8_t> solid(static_cast<std::size_t>(nx) * ny, 0);
  const double reach = h * 0.7072;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Vec2 c{ox + (i + 0.5) * h, (j + 0.5) * h};
      for (const auto& p : pieces_)
        if (p.distance(c) <= reach) {
          solid[static_cast<std::size_t>(j) * nx + i] = 1;
          break;
        }
    }
  auto at = [&](int i, int j) -> std::uint8_t& { return solid[static_cast<std::size_t>(j) * nx + i]; };
  // Solid components must reach the bottom row (the real axis).
  std::vector<std::uint8_t> mark(solid.size(), 0);
  std::vector<std::pair<int, int>> stack;
  for (int i = 0; i < nx; ++i)
    if (at(i, 0)) {
      mark[static_cast<std::size_t>(i)] = 1;
      stack.emplace_back(i, 0);
    }
  auto flood = [&](bool want_solid, int conn) {
    while (!stack.empty()) {
      const auto [i, j] = stack.back();
      stack.pop_back();
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if ((di == 0 && dj == 0) || (conn == 4 && di != 0 && dj != 0)) continue;
          const int a = i + di, b = j + dj;
          if (a < 0 || b < 0 || a >= nx || b >= ny) continue;
          const auto idx = static_cast<std::size_t>(b) * nx + a;
          if (mark[idx] || (solid[idx] != 0) != want_solid) continue;
          mark[idx] = 1;
          stack.emplace_back(a, b);
        }
    }
  };
  flood(true, 8);
  for (std::size_t k = 0; k < solid.size(); ++k)
    if (solid[k] && !mark[k]) return false;
  // Free pixels must connect to the outer margin. The solid raster covers
  // every pixel a piece touches, so it is 4-connected along each piece and
  // an 8-connected free flood cannot leak through it.
  std::fill(mark.begin(), mark.end(), 0);
  for (int i = 0; i < nx; ++i) {
    mark[static_cast<std::size_t>(ny - 1) * nx + i] = 1;
    stack.emplace_back(i, ny - 1);
  }
  for (int j = 0; j < ny; ++j)
    for (int i : {0, nx - 1})
      if (!at(i, j)) {
        mark[static_cast<std::size_t>(j) * nx + i] = 1;
        stack.emplace_back(i, j);
      }
  flood(false, 8);
  // Sharp wedges leave a few isolated free pixels near their apex; only an
  // enclosed component of at least a 3x3 block of pixels counts.
  for (std::size_t k = 0; k < solid.size(); ++k) {
    if (solid[k] || mark[k]) continue;
    const std::size_t before = std::count(mark.begin(), mark.end(), 1);
    mark[k] = 1;
    stack.emplace_back(static_cast<int>(k % nx), static_cast<int>(k / nx));
    flood(false, 8);
    if (std::count(mark.begin(), mark.end(), 1) - before >= 9) return false;
  }
  return true;
}

Hull parse_hull(std::istream& is) {
  std::vector<Piece> pieces;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    double v[4];
    if (!(ls >> v[0] >> v[1] >> v[2] >> v[3]))
      throw std::invalid_argument("hull line " + std::to_string(lineno) + ": expected four numbers");
    std::string extra;
    if (ls >> extra) throw std::invalid_argument("hull line " + std::to_string(lineno) + ": trailing input");
    try {
      if (kind == "seg")
        pieces.push_back(Piece::segment({v[0], v[1]}, {v[2], v[3]}));
      else if (kind == "box")
        pieces.push_back(Piece::box({v[0], v[1]}, {v[2], v[3]}));
      else
        throw std::invalid_argument("unknown piece '" + kind + "'");
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("hull line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return Hull(std::move(pieces));
}

Hull parse_hull(const std::string& text) {
  std::istringstream is(text);
  return parse_hull(is);
}

void write_hull(std::ostream& os, const Hull& h) {
  for (const auto& p : h.pieces())
    os << (p.kind == Piece::Kind::Box ? "box " : "seg ") << format_double(p.a.x) << ' ' << format_double(p.a.y)
       << ' ' << format_double(p.b.x) << ' ' << format_double(p.b.y) << '\n';
}

Hull slit(double height, double x) {
  if (!(height > 0.0)) throw std::invalid_argument("slit height must be positive");
  return Hull({Piece::segment({x, 0.0}, {x, height})});
}

// (2/pi) gives y^2/4 for the slit with exact Brownian paths. The factor after
// it corrects the discretization of the Gaussian stepping near the target at
// the default step; measured once on the unit slit with 4e6 walks.
double calibration_constant() { return 2.0 / std::numbers::pi * kStepCorrection; }

Geometry resolve_geometry(const std::vector<Hull>& targets, const WalkParams& params) {
  double lo = kInf, hi = -kInf;
  for (const auto& t : targets)
    if (!t.empty()) {
      lo = std::min(lo, t.min_x());
      hi = std::max(hi, t.max_x());
    }
  Geometry g;
  if (lo > hi) return g;
  g.shift = -(lo + hi) / 2.0;
  for (const auto& t : targets) g.radius = std::max(g.radius, t.translated(g.shift).bounding_radius());
  if (!(g.radius > 0.0)) throw std::invalid_argument("targets have zero extent");
  g.start_radius = params.start_radius > 0.0 ? params.start_radius : params.start_factor * g.radius;
  if (!(g.start_radius > g.radius)) throw std::invalid_argument("launch radius must exceed the bounding radius");
  g.step = params.step > 0.0 ? params.step : params.step_rel * g.radius;
  if (!(g.step > 0.0)) throw std::invalid_argument("step must be positive");
  return g;
}

CapacityEstimate Ensemble::estimate(std::size_t target) const {
  CapacityEstimate e;
  e.alpha = alpha;
  e.step = geometry.step;
  e.start_radius = geometry.start_radius;
  const auto& v = values.at(target);
  e.walks = static_cast<std::int64_t>(v.size());
  if (v.empty()) return e;
  double s = 0.0, ss = 0.0;
  for (double x : v) s += x;
  const double n = static_cast<double>(v.size()), m = s / n;
  for (double x : v) ss += (x - m) * (x - m);
  const double scale = calibration_constant() * geometry.start_radius;
  e.estimate = scale * m;
  e.stderr_ = v.size() > 1 ? scale * std::sqrt(ss / (n - 1) / n) : 0.0;
  return e;
}

Ensemble run_ensemble(const std::vector<Hull>& targets, double alpha, const WalkParams& params) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
  if (params.walks < 1) throw std::invalid_argument("walk count must be positive");
  if (params.threads < 1) throw std::invalid_argument("threads must be >= 1");
  Ensemble ens;
  ens.alpha = alpha;
  ens.values.assign(targets.size(), std::vector<double>(static_cast<std::size_t>(params.walks), 0.0));
  ens.geometry = resolve_geometry(targets, params);
  const Geometry& g = ens.geometry;
  if (!(g.radius > 0.0)) return ens;  // every target empty

  std::vector<Hull> shifted;
  std::vector<std::size_t> live_targets;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    shifted.push_back(targets[k].translated(g.shift));
    if (!targets[k].empty()) live_targets.push_back(k);
  }
  const double near = 2.0 * g.step;
  std::vector<std::uint8_t> truncated(static_cast<std::size_t>(params.walks), 0);

  const int chunks = static_cast<int>(std::min<std::int64_t>(params.walks, 256));
  experiments::parallel_for(chunks, params.threads, [&](int chunk) {
    const std::int64_t lo = params.walks * chunk / chunks, hi = params.walks * (chunk + 1) / chunks;
    std::vector<std::size_t> alive;
    for (std::int64_t w = lo; w < hi; ++w) {
      Stream rng(params.seed, {0x63617061, static_cast<std::uint64_t>(w)});
      std::normal_distribution<double> gauss;
      const double theta = std::acos(1.0 - 2.0 * rng.uniform());
      Vec2 z{g.start_radius * std::cos(theta), g.start_radius * std::sin(theta)};
      alive = live_targets;
      std::int64_t moves = 0;
      while (!alive.empty()) {
        if (++moves > params.max_moves) {
          truncated[static_cast<std::size_t>(w)] = 1;
          break;
        }
        double d = z.y;
        for (auto k : alive) d = std::min(d, shifted[k].distance(z));
        if (d > near) {
          const double phi = 2.0 * std::numbers::pi * rng.uniform();
          z = {z.x + d * std::cos(phi), z.y + d * std::sin(phi)};
          continue;
        }
        const Vec2 q{z.x + g.step * gauss(rng), z.y + g.step * gauss(rng)};
        const double t_axis = q.y <= 0.0 ? z.y / (z.y - q.y) : kInf;
        for (std::size_t i = 0; i < alive.size();) {
          const auto k = alive[i];
          const double t = shifted[k].first_hit(z, q);
          if (t >= 0.0 && t <= t_axis) {
            const double y = z.y + t * (q.y - z.y);
            ens.values[k][static_cast<std::size_t>(w)] = alpha == 1.0 ? y : std::pow(y, alpha);
            alive[i] = alive.back();
            alive.pop_back();
          } else {
            ++i;
          }
        }
        if (t_axis <= 1.0) break;
        z = q;
      }
    }
  });
  for (auto t : truncated) ens.truncated_walks += t;
  return ens;
}

CapacityEstimate m_alpha(const Hull& a, double alpha, const WalkParams& params) {
  if (a.empty()) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
    CapacityEstimate e;
    e.alpha = alpha;
    e.walks = params.walks;
    return e;
  }
  return run_ensemble({a}, alpha, params).estimate(0);
}

double HyperbolicSquare::side() const { return std::ldexp(1.0, j); }

Hull HyperbolicSquare::region() const {
  const double s = side(), x = static_cast<double>(a) * s;
  return Hull({Piece::box({x, s}, {x + s, 2.0 * s})});
}

Hull HyperbolicSquare::column() const {
  const double s = side(), x = static_cast<double>(a) * s;
  return Hull({Piece::box({x, 0.0}, {x + s, 2.0 * s})});
}

Tiling tiling_of(const Hull& hull, int j_min) {
  Tiling out;
  std::set<HyperbolicSquare> squares;
  for (const auto& p : hull.pieces()) {
    const double ylo = p.min_y(), yhi = p.max_y();
    if (yhi <= 0.0) {
      out.truncated = true;  // a piece on the real axis itself
      continue;
    }
    if (ylo < std::ldexp(1.0, j_min)) out.truncated = true;
    int j_top = 0;
    std::frexp(yhi, &j_top);
    j_top -= 1;  // yhi in [2^j_top, 2^(j_top+1))
    int j_bot = j_min;
    if (ylo > 0.0) {
      int e = 0;
      std::frexp(ylo, &e);
      j_bot = std::max(j_min, e - 1);
    }
    const bool solid = p.kind == Piece::Kind::Box && p.b.x > p.a.x && p.b.y > p.a.y;
    for (int j = j_bot; j <= j_top; ++j) {
      const double s = std::ldexp(1.0, j), ya = s, yb = 2.0 * s;
      if (solid) {
        // Boxes meet the squares their interior overlaps, so a union of
        // tiling squares is its own hat.
        if (!(ylo < yb && yhi > ya)) continue;
        const auto ia = static_cast<std::int64_t>(std::floor(p.a.x / s));
        const auto ib = static_cast<std::int64_t>(std::ceil(p.b.x / s)) - 1;
        for (std::int64_t a = ia; a <= ib; ++a) squares.insert({a, j});
        continue;
      }
      if (!(ylo < yb && yhi >= ya)) continue;
      double xa = 0.0, xb = 0.0;
      if (p.kind == Piece::Kind::Box || p.a.y == p.b.y) {
        xa = std::min(p.a.x, p.b.x);
        xb = std::max(p.a.x, p.b.x);
      } else {
        auto x_at = [&](double y) { return p.a.x + (p.b.x - p.a.x) * (y - p.a.y) / (p.b.y - p.a.y); };
        const double y0 = std::max(ylo, ya), y1 = std::min(yhi, yb);
        xa = std::min(x_at(y0), x_at(y1));
        xb = std::max(x_at(y0), x_at(y1));
      }
      const auto ia = static_cast<std::int64_t>(std::floor(xa / s));
      const auto ib = static_cast<std::int64_t>(std::floor(xb / s));
      for (std::int64_t a = ia; a <= ib; ++a) squares.insert({a, j});
    }
  }
  out.squares.assign(squares.begin(), squares.end());
  std::vector<Piece> boxes;
  for (const auto& s : out.squares) boxes.push_back(s.region().pieces().front());
  out.hat = Hull(std::move(boxes));
  return out;
}

namespace {

bool same_pieces(const Hull& a, const Hull& b) {
  auto key = [](const Piece& p) { return std::make_tuple(static_cast<int>(p.kind), p.a.x, p.a.y, p.b.x, p.b.y); };
  auto sorted = [&](const Hull& h) {
    std::vector<decltype(key(Piece{}))> v;
    for (const auto& p : h.pieces()) v.push_back(key(p));
    std::sort(v.begin(), v.end());
    return v;
  };
  return sorted(a) == sorted(b);
}

bool within(double lhs, double rhs, double se_l, double se_r) {
  return lhs <= rhs + 3.0 * std::sqrt(se_l * se_l + se_r * se_r);
}

}  // namespace

SandwichReport sandwich_check(const Hull& a, double alpha, const WalkParams& params, int j_min) {
  SandwichReport r;
  const Tiling t = tiling_of(a, j_min);
  r.truncated = t.truncated;
  r.square_count = t.squares.size();
  if (same_pieces(a, t.hat)) {
    r.m_a = m_alpha(a, alpha, params);
    r.m_hat = r.m_a;
  } else {
    const auto ens = run_ensemble({a, t.hat}, alpha, params);
    r.m_a = ens.estimate(0);
    r.m_hat = ens.estimate(1);
  }
  WalkParams unit = params;
  unit.seed = derive_seed(params.seed, {0x756e6974});
  r.m_unit_square = m_alpha(HyperbolicSquare{0, 0}.region(), alpha, unit);
  double weight = 0.0;
  for (const auto& s : t.squares) weight += std::pow(2.0, s.j * (alpha + 1.0));
  r.sum_squares = r.m_unit_square.estimate * weight;
  r.sum_squares_stderr = r.m_unit_square.stderr_ * weight;
  r.ratio_hat = r.m_hat.estimate > 0.0 ? r.m_a.estimate / r.m_hat.estimate : 0.0;
  r.ratio_sum = r.sum_squares > 0.0 ? r.m_a.estimate / r.sum_squares : 0.0;
  r.hat_upper_ok = within(r.m_a.estimate, r.m_hat.estimate, r.m_a.stderr_, r.m_hat.stderr_);
  r.sum_upper_ok = within(r.m_a.estimate, r.sum_squares, r.m_a.stderr_, r.sum_squares_stderr);
  return r;
}

MonotoneReport monotonicity_subadditivity_check(const Hull& a, const Hull& b, double alpha, const WalkParams& params) {
  MonotoneReport r;
  const auto ens = run_ensemble({a, b, a.united(b)}, alpha, params);
  r.m_a = ens.estimate(0);
  r.m_b = ens.estimate(1);
  r.m_union = ens.estimate(2);
  for (std::size_t w = 0; w < ens.values[2].size(); ++w)
    if (ens.values[2][w] > ens.values[0][w] + ens.values[1][w]) ++r.pathwise_violations;
  const double se_sum = std::hypot(r.m_a.stderr_, r.m_b.stderr_);
  r.subadditive_ok = within(r.m_union.estimate, r.m_a.estimate + r.m_b.estimate, r.m_union.stderr_, se_sum);
  r.monotone_ok = within(r.m_a.estimate, r.m_b.estimate, r.m_a.stderr_, r.m_b.stderr_);
  return r;
}

}  // namespace loopsoup::capacity
