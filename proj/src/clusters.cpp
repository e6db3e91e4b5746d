#include "loopsoup/clusters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "loopsoup/stats.hpp"

namespace loopsoup {

namespace {

class DisjointSets {
public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

private:
  std::vector<int> parent_;
  std::vector<std::uint8_t> rank_;
};

}  // namespace

bool ClusterSet::touches_boundary(int id) const {
  const Cluster& c = clusters.at(static_cast<std::size_t>(id));
  const BBox frame = domain.bbox();
  if (c.bbox.lo.x > frame.lo.x && c.bbox.lo.y > frame.lo.y && c.bbox.hi.x < frame.hi.x && c.bbox.hi.y < frame.hi.y)
    return false;
  return true;  // a bbox side on the frame edge means some site is on it
}

bool ClusterSet::crosses_left_right(int id) const {
  const Cluster& c = clusters.at(static_cast<std::size_t>(id));
  const BBox frame = domain.bbox();
  return c.bbox.lo.x == frame.lo.x && c.bbox.hi.x == frame.hi.x;
}

ClusterSet build_clusters(const LoopSoup& soup) {
  ClusterSet cs;
  cs.domain = soup.domain;
  const std::size_t n_loops = soup.loops.size();
  std::vector<int> first_loop(soup.domain.size(), -1);
  DisjointSets dsu(n_loops);
  for (std::size_t i = 0; i < n_loops; ++i) {
    const int li = static_cast<int>(i);
    soup.loops[i].for_each_site([&](Point p) {
      int& owner = first_loop[soup.domain.index(p)];
      if (owner < 0)
        owner = li;
      else
        dsu.unite(li, owner);
    });
  }

  cs.assignment.assign(n_loops, -1);
  std::vector<int> root_to_id(n_loops, -1);
  for (std::size_t i = 0; i < n_loops; ++i) {
    const int r = dsu.find(static_cast<int>(i));
    if (root_to_id[static_cast<std::size_t>(r)] < 0) {
      root_to_id[static_cast<std::size_t>(r)] = static_cast<int>(cs.clusters.size());
      cs.clusters.emplace_back();
    }
    const int id = root_to_id[static_cast<std::size_t>(r)];
    cs.assignment[i] = id;
    cs.clusters[static_cast<std::size_t>(id)].loops.push_back(static_cast<int>(i));
  }

  cs.site_label.assign(soup.domain.size(), -1);
  for (std::size_t s = 0; s < first_loop.size(); ++s) {
    if (first_loop[s] < 0) continue;
    const int id = cs.assignment[static_cast<std::size_t>(first_loop[s])];
    cs.site_label[s] = id;
    Cluster& c = cs.clusters[static_cast<std::size_t>(id)];
    const Point p = soup.domain.point(s);
    c.sites.push_back(p);
    c.bbox.add(p);
  }
  return cs;
}

void check_cluster_invariants(const LoopSoup& soup, const ClusterSet& cs) {
  if (cs.assignment.size() != soup.loops.size()) throw std::logic_error("cluster assignment size mismatch");
  std::vector<int> seen(soup.loops.size(), 0);
  for (std::size_t id = 0; id < cs.clusters.size(); ++id) {
    for (int li : cs.clusters[id].loops) {
      if (cs.assignment[static_cast<std::size_t>(li)] != static_cast<int>(id))
        throw std::logic_error("loop listed under the wrong cluster");
      ++seen[static_cast<std::size_t>(li)];
    }
  }
  for (int s : seen)
    if (s != 1) throw std::logic_error("clusters do not partition the loops");
  for (std::size_t i = 0; i < soup.loops.size(); ++i) {
    const int id = cs.assignment[i];
    soup.loops[i].for_each_site([&](Point p) {
      if (cs.label_at(p) != id) throw std::logic_error("loops sharing a site carry different cluster ids");
    });
  }
}

std::vector<Point> fill_sites(std::span<const Point> sites, const LatticeDomain& frame) {
  if (sites.empty()) return {};
  BBox box;
  for (Point p : sites) {
    if (!frame.contains(p)) throw std::invalid_argument("fill: cluster site outside the frame");
    box.add(p);
  }
  // Local grid with a one-site collar; the collar belongs to the exterior.
  const int gx = box.lo.x - 1, gy = box.lo.y - 1;
  const int gw = box.width() + 2, gh = box.height() + 2;
  auto at = [&](int x, int y) { return static_cast<std::size_t>(y - gy) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(x - gx); };
  std::vector<std::uint8_t> state(static_cast<std::size_t>(gw) * static_cast<std::size_t>(gh), 0);  // 1 = wall, 2 = outside
  for (Point p : sites) state[at(p.x, p.y)] = 1;

  std::vector<Point> stack;
  stack.push_back({gx, gy});
  state[at(gx, gy)] = 2;
  while (!stack.empty()) {
    const Point p = stack.back();
    stack.pop_back();
    for (const Point d : kDirStep) {
      const Point q = p + d;
      if (q.x < gx || q.y < gy || q.x >= gx + gw || q.y >= gy + gh) continue;
      std::uint8_t& s = state[at(q.x, q.y)];
      if (s != 0) continue;
      s = 2;
      stack.push_back(q);
    }
  }

  std::vector<Point> out;
  for (int y = box.lo.y; y <= box.hi.y; ++y)
    for (int x = box.lo.x; x <= box.hi.x; ++x)
      if (state[at(x, y)] != 2) out.push_back({x, y});
  return out;
}

FilledCluster fill(const ClusterSet& cs, int id, const LatticeDomain& frame) {
  const Cluster& c = cs.clusters.at(static_cast<std::size_t>(id));
  FilledCluster fc;
  fc.id = id;
  fc.fill = fill_sites(c.sites, frame);
  fc.bbox = c.bbox;
  fc.touches_boundary = cs.touches_boundary(id);
  return fc;
}

std::vector<FilledCluster> outermost(const ClusterSet& cs, const LatticeDomain& frame) {
  std::vector<FilledCluster> out;
  out.reserve(cs.clusters.size());
  std::vector<std::uint8_t> covered(frame.size(), 0);
  for (std::size_t id = 0; id < cs.clusters.size(); ++id) {
    out.push_back(fill(cs, static_cast<int>(id), frame));
    for (Point p : out.back().fill)
      if (cs.label_at(p) != static_cast<int>(id)) covered[frame.index(p)] = 1;
  }
  // Clusters are 4-connected and pairwise disjoint, so one site decides
  // whether a whole cluster sits inside another cluster's fill.
  for (std::size_t id = 0; id < cs.clusters.size(); ++id) {
    const Point rep = cs.clusters[id].sites.front();
    out[id].outermost = covered[frame.index(rep)] == 0;
  }
  return out;
}

namespace {

// Moore neighbourhood in counter-clockwise angular order starting at east.
constexpr std::array<Point, 8> kRing{{{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

int ring_index(Point d) {
  for (int i = 0; i < 8; ++i)
    if (kRing[static_cast<std::size_t>(i)] == d) return i;
  throw std::logic_error("backtrack is not a Moore neighbour");
}

bool adjacent8(Point a, Point b) { return a != b && std::abs(a.x - b.x) <= 1 && std::abs(a.y - b.y) <= 1; }

}  // namespace

bool BoundaryLoop::closed() const {
  if (points.size() <= 1) return !points.empty();
  for (std::size_t i = 0; i < points.size(); ++i)
    if (!adjacent8(points[i], points[(i + 1) % points.size()])) return false;
  return true;
}

bool BoundaryLoop::simple() const {
  std::vector<Point> s = points;
  std::sort(s.begin(), s.end());
  return std::adjacent_find(s.begin(), s.end()) == s.end();
}

BoundaryLoop trace_outer_boundary(std::span<const Point> fill) {
  if (fill.empty()) throw std::invalid_argument("trace_outer_boundary: empty fill");
  BBox box;
  for (Point p : fill) box.add(p);
  const int gx = box.lo.x - 1, gy = box.lo.y - 1;
  const int gw = box.width() + 2, gh = box.height() + 2;
  std::vector<std::uint8_t> inside(static_cast<std::size_t>(gw) * static_cast<std::size_t>(gh), 0);
  auto at = [&](Point p) { return static_cast<std::size_t>(p.y - gy) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(p.x - gx); };
  for (Point p : fill) inside[at(p)] = 1;
  const Point start = *std::min_element(fill.begin(), fill.end());

  struct State {
    Point cur;
    Point back;
    bool operator==(const State&) const = default;
  };
  // One Moore step: scan the ring counter-clockwise from the backtrack.
  auto advance = [&](const State& s, bool& found) {
    const int b = ring_index(s.back - s.cur);
    for (int k = 1; k < 8; ++k) {
      const Point q = s.cur + kRing[static_cast<std::size_t>((b + k) % 8)];
      if (inside[at(q)]) {
        found = true;
        return State{q, s.cur + kRing[static_cast<std::size_t>((b + k - 1) % 8)]};
      }
    }
    found = false;
    return s;
  };

  BoundaryLoop out;
  out.points.push_back(start);
  bool found = false;
  const State first = advance({start, start + Point{-1, 0}}, found);
  if (!found) return out;  // isolated site

  const std::size_t cap = 8 * fill.size() + 16;
  State s = first;
  out.points.push_back(s.cur);
  for (std::size_t it = 0;; ++it) {
    if (it > cap) throw std::logic_error("contour trace did not close");
    s = advance(s, found);
    if (s == first) break;
    out.points.push_back(s.cur);
  }
  // The state preceding `first` on the cycle sits on the start site.
  if (out.points.back() != start) throw std::logic_error("contour trace closed away from its start");
  out.points.pop_back();
  return out;
}

BoundaryLoop trace_outer_boundary(const FilledCluster& fc) { return trace_outer_boundary(std::span<const Point>(fc.fill)); }

BoxCountResult box_counting_dimension(std::span<const Point> points, std::span<const int> scales) {
  if (scales.size() < 3) throw std::invalid_argument("box counting needs at least 3 scales");
  for (int s : scales)
    if (s < 2) throw std::invalid_argument("box sizes must be >= 2 lattice units");
  if (points.empty()) throw std::invalid_argument("box counting of an empty point set");
  BBox box;
  for (Point p : points) box.add(p);

  BoxCountResult r;
  std::vector<double> lx, ly;
  std::vector<std::uint64_t> keys(points.size());
  for (int s : scales) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto bx = static_cast<std::uint64_t>((points[i].x - box.lo.x) / s);
      const auto by = static_cast<std::uint64_t>((points[i].y - box.lo.y) / s);
      keys[i] = (bx << 32) | by;
    }
    std::sort(keys.begin(), keys.end());
    const auto n = std::unique(keys.begin(), keys.end()) - keys.begin();
    r.scales.push_back(s);
    r.counts.push_back(n);
    lx.push_back(-std::log(static_cast<double>(s)));
    ly.push_back(std::log(static_cast<double>(n)));
  }
  const auto fit = stats::linear_fit(lx, ly);
  r.estimate = fit.slope;
  r.r2 = fit.r2;
  return r;
}

}  // namespace loopsoup
