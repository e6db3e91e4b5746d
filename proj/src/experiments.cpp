#include "loopsoup/experiments.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include "loopsoup/stats.hpp"

namespace loopsoup::experiments {

LatticeDomain ScanConfig::frame() const {
  const int width = static_cast<int>(std::lround(aspect * size));
  return LatticeDomain(width, size, mesh);
}

void ScanConfig::validate() const {
  if (c_grid.empty()) throw std::invalid_argument("c grid is empty");
  for (double c : c_grid)
    if (!(c >= 0.0)) throw std::invalid_argument("intensities must be non-negative");
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (size < 1) throw std::invalid_argument("lattice size must be >= 1");
  if (!(aspect > 0.0) || std::lround(aspect * size) < 1) throw std::invalid_argument("aspect must be positive");
  if (!(mesh > 0.0)) throw std::invalid_argument("mesh must be positive");
  if (max_len < 2 || max_len % 2 != 0) throw std::invalid_argument("max_len must be even and >= 2");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (!(touch_extent >= 0.0 && touch_extent <= 1.0)) throw std::invalid_argument("touch_extent must lie in [0,1]");
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t rep) { return derive_seed(master, {0x7265706cULL, rep}); }

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  const int workers = std::min(threads, n);
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ClusterObservables observe(const ClusterSet& cs, double touch_extent) {
  ClusterObservables o;
  const auto& d = cs.domain;
  const double need_w = touch_extent * d.width();
  const double need_h = touch_extent * d.height();
  const BBox frame = d.bbox();
  o.cluster_count = static_cast<std::int64_t>(cs.clusters.size());
  for (std::size_t id = 0; id < cs.clusters.size(); ++id) {
    const Cluster& c = cs.clusters[id];
    o.largest_cluster = std::max<std::int64_t>(o.largest_cluster, static_cast<std::int64_t>(c.sites.size()));
    const bool left = c.bbox.lo.x == frame.lo.x, right = c.bbox.hi.x == frame.hi.x;
    const bool bottom = c.bbox.lo.y == frame.lo.y, top = c.bbox.hi.y == frame.hi.y;
    const bool edge = left || right || bottom || top;
    o.touch_any = o.touch_any || edge;
    if (edge && (c.bbox.width() >= need_w || c.bbox.height() >= need_h)) o.touch = true;
    o.crossing = o.crossing || (left && right);
    o.spanning = o.spanning || (left && right && bottom && top);
  }
  return o;
}

namespace {

std::vector<double> sorted_grid(std::vector<double> g) {
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

std::string join_grid(const std::vector<double>& g) {
  std::string s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) s += ',';
    s += format_double(g[i]);
  }
  return s;
}

std::map<std::string, std::string> base_config(const ScanConfig& cfg) {
  const auto f = cfg.frame();
  return {{"width", std::to_string(f.width())},
          {"height", std::to_string(f.height())},
          {"mesh", format_double(cfg.mesh)},
          {"max_len", std::to_string(cfg.max_len)},
          {"replicates", std::to_string(cfg.replicates)},
          {"c_grid", join_grid(sorted_grid(cfg.c_grid))},
          {"touch_extent", format_double(cfg.touch_extent)}};
}

}  // namespace

ExperimentResult boundary_touch_scan(const ScanConfig& cfg) {
  cfg.validate();
  const auto grid = sorted_grid(cfg.c_grid);
  const double c_max = grid.back();
  const LatticeDomain frame = cfg.frame();
  const LoopMassTable table(cfg.max_len);
  std::vector<std::vector<ClusterObservables>> per_rep(static_cast<std::size_t>(cfg.replicates));

  parallel_for(cfg.replicates, cfg.threads, [&](int rep) {
    const LoopSoup soup = sample_soup(frame, c_max, table, replicate_seed(cfg.seed, static_cast<std::uint64_t>(rep)));
    auto& obs = per_rep[static_cast<std::size_t>(rep)];
    for (double c : grid) obs.push_back(observe(build_clusters(soup.at_intensity(c)), cfg.touch_extent));
  });

  ExperimentResult res;
  res.experiment = "scan";
  res.config = base_config(cfg);
  res.master_seeds = {cfg.seed};
  const std::int64_t n = cfg.replicates;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::int64_t touch = 0, touch_any = 0, crossing = 0, spanning = 0;
    std::int64_t cc = 0, cc2 = 0, lg = 0, lg2 = 0;
    for (const auto& obs : per_rep) {
      const auto& o = obs[i];
      touch += o.touch;
      touch_any += o.touch_any;
      crossing += o.crossing;
      spanning += o.spanning;
      cc += o.cluster_count;
      cc2 += o.cluster_count * o.cluster_count;
      lg += o.largest_cluster;
      lg2 += o.largest_cluster * o.largest_cluster;
    }
    const double c = grid[i];
    res.rows.push_back(frequency_row(c, "touch", touch, n));
    res.rows.push_back(frequency_row(c, "touch_any", touch_any, n));
    res.rows.push_back(frequency_row(c, "crossing", crossing, n));
    res.rows.push_back(frequency_row(c, "spanning", spanning, n));
    res.rows.push_back(mean_row(c, "cluster_count", cc, cc2, n));
    res.rows.push_back(mean_row(c, "largest_cluster", lg, lg2, n));
  }
  res.sort_rows();
  return res;
}

ExperimentResult crossing_scan(ScanConfig cfg, double aspect) {
  if (!(aspect > 0.0)) throw std::invalid_argument("aspect must be positive");
  cfg.aspect = aspect;
  ExperimentResult r = boundary_touch_scan(cfg);
  r.experiment = "crossing";
  std::erase_if(r.rows, [](const ResultRow& row) { return row.stat != "crossing" && row.stat != "spanning"; });
  return r;
}

CouplingViolations coupling_check(const ScanConfig& cfg) {
  cfg.validate();
  const auto grid = sorted_grid(cfg.c_grid);
  const LatticeDomain frame = cfg.frame();
  const LoopMassTable table(cfg.max_len);
  std::vector<CouplingViolations> per_rep(static_cast<std::size_t>(cfg.replicates));

  parallel_for(cfg.replicates, cfg.threads, [&](int rep) {
    CouplingViolations& v = per_rep[static_cast<std::size_t>(rep)];
    v.replicates = 1;
    const LoopSoup soup = sample_soup(frame, grid.back(), table, replicate_seed(cfg.seed, static_cast<std::uint64_t>(rep)));
    LoopSoup prev = soup.at_intensity(grid.front());
    ClusterSet prev_cs = build_clusters(prev);
    ClusterObservables prev_obs = observe(prev_cs, cfg.touch_extent);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      LoopSoup cur = soup.at_intensity(grid[i]);
      ClusterSet cur_cs = build_clusters(cur);
      const ClusterObservables cur_obs = observe(cur_cs, cfg.touch_extent);

      // prev's loops must appear, in order, among cur's loops.
      std::size_t j = 0;
      for (const Loop& l : cur.loops)
        if (j < prev.loops.size() && l.root == prev.loops[j].root && l.steps == prev.loops[j].steps) ++j;
      if (j != prev.loops.size()) ++v.loop_set;

      bool contained = true;
      for (const Cluster& c : prev_cs.clusters) {
        const int target = cur_cs.label_at(c.sites.front());
        for (Point p : c.sites) contained = contained && target >= 0 && cur_cs.label_at(p) == target;
      }
      if (!contained) ++v.cluster_containment;
      if (prev_obs.touch && !cur_obs.touch) ++v.touch;
      if (prev_obs.touch_any && !cur_obs.touch_any) ++v.touch;
      if (prev_obs.crossing && !cur_obs.crossing) ++v.crossing;

      prev = std::move(cur);
      prev_cs = std::move(cur_cs);
      prev_obs = cur_obs;
    }
  });

  CouplingViolations total;
  for (const auto& v : per_rep) {
    total.replicates += v.replicates;
    total.loop_set += v.loop_set;
    total.cluster_containment += v.cluster_containment;
    total.touch += v.touch;
    total.crossing += v.crossing;
  }
  return total;
}

int annulus_crossings(const ClusterSet& cs, Point centre, int inner, int outer) {
  if (!(inner > 0 && inner < outer)) throw std::invalid_argument("annulus needs 0 < inner < outer");
  std::set<int> near;
  const long r2 = static_cast<long>(inner) * inner;
  for (int dy = -inner; dy <= inner; ++dy)
    for (int dx = -inner; dx <= inner; ++dx)
      if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy <= r2) {
        const int id = cs.label_at(centre + Point{dx, dy});
        if (id >= 0) near.insert(id);
      }
  const long R2 = static_cast<long>(outer) * outer;
  int k = 0;
  for (int id : near) {
    const Cluster& c = cs.clusters[static_cast<std::size_t>(id)];
    // Cheap reject: every bbox corner closer than outer.
    const long fx = std::max(std::abs(c.bbox.lo.x - centre.x), std::abs(c.bbox.hi.x - centre.x));
    const long fy = std::max(std::abs(c.bbox.lo.y - centre.y), std::abs(c.bbox.hi.y - centre.y));
    if (fx * fx + fy * fy < R2) continue;
    for (Point p : c.sites) {
      const long dx = p.x - centre.x, dy = p.y - centre.y;
      if (dx * dx + dy * dy >= R2) {
        ++k;
        break;
      }
    }
  }
  return k;
}

ExperimentResult annulus_chain_tail(const AnnulusConfig& acfg, const ScanConfig& cfg) {
  cfg.validate();
  if (!(acfg.c >= 0.0)) throw std::invalid_argument("intensity must be non-negative");
  if (!(acfg.inner > 0 && acfg.inner < acfg.outer)) throw std::invalid_argument("degenerate annulus: need 0 < r < R");
  if (acfg.k_max < 1 || acfg.min_hits < 1) throw std::invalid_argument("k_max and min_hits must be >= 1");
  const LatticeDomain frame = cfg.frame();
  const Point centre{frame.offset().x + frame.width() / 2, frame.offset().y + frame.height() / 2};
  if (!frame.contains(centre - Point{acfg.outer, acfg.outer}) || !frame.contains(centre + Point{acfg.outer, acfg.outer}))
    throw std::invalid_argument("annulus does not fit inside the frame");
  const LoopMassTable table(cfg.max_len);
  std::vector<int> counts(static_cast<std::size_t>(cfg.replicates), 0);

  parallel_for(cfg.replicates, cfg.threads, [&](int rep) {
    const LoopSoup soup = sample_soup(frame, acfg.c, table, replicate_seed(cfg.seed, static_cast<std::uint64_t>(rep)));
    counts[static_cast<std::size_t>(rep)] = annulus_crossings(build_clusters(soup), centre, acfg.inner, acfg.outer);
  });

  ExperimentResult res;
  res.experiment = "annulus";
  res.config = base_config(cfg);
  res.config.erase("c_grid");
  res.config.erase("touch_extent");
  res.config["c"] = format_double(acfg.c);
  res.config["inner"] = std::to_string(acfg.inner);
  res.config["outer"] = std::to_string(acfg.outer);
  res.config["k_max"] = std::to_string(acfg.k_max);
  res.config["min_hits"] = std::to_string(acfg.min_hits);
  res.master_seeds = {cfg.seed};
  for (int k = 0; k <= acfg.k_max; ++k) {
    const auto hits = std::count_if(counts.begin(), counts.end(), [k](int v) { return v >= k; });
    res.rows.push_back(frequency_row(acfg.c, "tail_ge_" + std::to_string(k), hits, cfg.replicates));
  }
  finalize_result(res);
  return res;
}

namespace {

constexpr double kAlpha = 0.01;

// Per-arm accumulators for the law comparison.
struct LawAccumulator {
  std::vector<std::int64_t> cell_totals;      // (length, site) cell sums over replicates
  std::vector<std::int64_t> cell_value_hist;  // occurrences of per-cell count 1, 2, ...
  std::vector<std::int64_t> cluster_count, largest, touch_any, touch;
  std::vector<std::vector<std::int64_t>> per_length;  // per replicate loop count for lengths 2,4,6,8
  std::vector<std::int64_t> total_loops;
};

std::vector<std::int64_t> hist_with_zero(const std::vector<std::int64_t>& nonzero, std::int64_t observations) {
  std::vector<std::int64_t> h(nonzero.size() + 1, 0);
  std::int64_t nz = 0;
  for (std::size_t v = 0; v < nonzero.size(); ++v) {
    h[v + 1] = nonzero[v];
    nz += nonzero[v];
  }
  h[0] = observations - nz;
  return h;
}

// Merges sparse histogram columns from the right until each holds >= min.
void pool_columns(std::vector<std::int64_t>& a, std::vector<std::int64_t>& b, std::int64_t min) {
  while (a.size() > 1 && a.back() + b.back() < min) {
    a[a.size() - 2] += a.back();
    b[b.size() - 2] += b.back();
    a.pop_back();
    b.pop_back();
  }
}

TestLine make_line(std::string name, const stats::ChiSquareResult& r) {
  return {std::move(name), r.statistic, r.dof, r.p_value, r.p_value > kAlpha};
}

TestReport compare_soup_laws(const std::string& experiment, const LatticeDomain& cells_domain, int max_len,
                             const ScanConfig& cfg, const std::function<LoopSoup(std::uint64_t)>& arm_a,
                             const std::function<LoopSoup(std::uint64_t)>& arm_b) {
  const std::size_t n_sites = cells_domain.size();
  const std::size_t n_cells = static_cast<std::size_t>(max_len / 2) * n_sites;
  const int reps = cfg.replicates;

  struct RepOut {
    std::vector<std::uint64_t> cells;  // cell id per loop
    ClusterObservables obs;
    std::array<std::int64_t, 4> short_lengths{};
    std::int64_t loops = 0;
  };
  auto digest = [&](const LoopSoup& s) {
    RepOut o;
    o.cells.reserve(s.loops.size());
    for (const Loop& l : s.loops) {
      const std::size_t li = static_cast<std::size_t>(l.length() / 2 - 1);
      o.cells.push_back(static_cast<std::uint64_t>(li * n_sites + cells_domain.index(l.root)));
      if (li < 4) ++o.short_lengths[li];
    }
    std::sort(o.cells.begin(), o.cells.end());
    o.obs = observe(build_clusters(s), cfg.touch_extent);
    o.loops = static_cast<std::int64_t>(s.loops.size());
    return o;
  };

  std::vector<RepOut> out_a(static_cast<std::size_t>(reps)), out_b(static_cast<std::size_t>(reps));
  parallel_for(reps, cfg.threads, [&](int rep) {
    const std::uint64_t rs = replicate_seed(cfg.seed, static_cast<std::uint64_t>(rep));
    out_a[static_cast<std::size_t>(rep)] = digest(arm_a(rs));
    out_b[static_cast<std::size_t>(rep)] = digest(arm_b(rs));
  });

  auto accumulate = [&](const std::vector<RepOut>& outs) {
    LawAccumulator acc;
    acc.cell_totals.assign(n_cells, 0);
    acc.per_length.assign(4, {});
    for (const RepOut& o : outs) {
      for (std::size_t i = 0; i < o.cells.size();) {
        std::size_t j = i;
        while (j < o.cells.size() && o.cells[j] == o.cells[i]) ++j;
        const auto count = static_cast<std::size_t>(j - i);
        acc.cell_totals[o.cells[i]] += static_cast<std::int64_t>(count);
        if (acc.cell_value_hist.size() < count) acc.cell_value_hist.resize(count, 0);
        ++acc.cell_value_hist[count - 1];
        i = j;
      }
      acc.cluster_count.push_back(o.obs.cluster_count);
      acc.largest.push_back(o.obs.largest_cluster);
      acc.touch_any.push_back(o.obs.touch_any);
      acc.touch.push_back(o.obs.touch);
      for (std::size_t k = 0; k < 4; ++k) acc.per_length[k].push_back(o.short_lengths[k]);
      acc.total_loops.push_back(o.loops);
    }
    return acc;
  };
  const LawAccumulator a = accumulate(out_a), b = accumulate(out_b);

  TestReport rep;
  rep.experiment = experiment;
  rep.tests.push_back(make_line("cell_means", stats::poisson_cells_test(a.cell_totals, b.cell_totals)));
  {
    const std::int64_t obs = static_cast<std::int64_t>(n_cells) * reps;
    auto ha = hist_with_zero(a.cell_value_hist, obs), hb = hist_with_zero(b.cell_value_hist, obs);
    const std::size_t w = std::max(ha.size(), hb.size());
    ha.resize(w, 0);
    hb.resize(w, 0);
    pool_columns(ha, hb, 20);
    rep.tests.push_back(make_line("cell_count_values", stats::chi_square_homogeneity(ha, hb)));
  }
  for (std::size_t k = 0; k < 4; ++k)
    rep.tests.push_back(make_line("loops_len" + std::to_string(2 * (k + 1)),
                                  stats::two_sample_chi_square(a.per_length[k], b.per_length[k])));
  rep.tests.push_back(make_line("loops_total", stats::two_sample_chi_square(a.total_loops, b.total_loops)));
  rep.tests.push_back(make_line("cluster_count", stats::two_sample_chi_square(a.cluster_count, b.cluster_count)));
  rep.tests.push_back(make_line("largest_cluster", stats::two_sample_chi_square(a.largest, b.largest)));
  rep.tests.push_back(make_line("touch_any", stats::two_sample_chi_square(a.touch_any, b.touch_any, 1)));
  rep.tests.push_back(make_line("touch", stats::two_sample_chi_square(a.touch, b.touch, 1)));
  return rep;
}

}  // namespace

TestReport additivity_check(double c1, double c2, const ScanConfig& cfg) {
  cfg.validate();
  if (!(c1 >= 0.0 && c2 >= 0.0)) throw std::invalid_argument("intensities must be non-negative");
  const LatticeDomain frame = cfg.frame();
  const LoopMassTable table(cfg.max_len);
  return compare_soup_laws(
      "additivity", frame, cfg.max_len, cfg,
      [&](std::uint64_t s) {
        return superpose(sample_soup(frame, c1, table, derive_seed(s, {1})), sample_soup(frame, c2, table, derive_seed(s, {2})));
      },
      [&](std::uint64_t s) { return sample_soup(frame, c1 + c2, table, derive_seed(s, {3})); });
}

TestReport restriction_check(double c, const LatticeDomain& sub, const ScanConfig& cfg) {
  cfg.validate();
  const LatticeDomain frame = cfg.frame();
  if (!frame.contains(sub)) throw std::invalid_argument("restriction domain must lie inside the frame");
  const LoopMassTable table(cfg.max_len);
  return compare_soup_laws(
      "restriction", sub, cfg.max_len, cfg,
      [&](std::uint64_t s) { return restrict_soup(sample_soup(frame, c, table, derive_seed(s, {1})), sub); },
      [&](std::uint64_t s) { return sample_soup(sub, c, table, derive_seed(s, {2})); });
}

}  // namespace loopsoup::experiments
