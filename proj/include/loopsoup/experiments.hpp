#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "loopsoup/clusters.hpp"
#include "loopsoup/loop_soup.hpp"
#include "loopsoup/results.hpp"

namespace loopsoup::experiments {

struct ScanConfig {
  std::vector<double> c_grid{0.2, 0.6, 1.0, 1.4};
  int size = 256;         // frame height; width = round(aspect * size)
  double aspect = 1.0;
  double mesh = 1.0;
  int max_len = 512;
  int replicates = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  // A boundary-touching cluster counts for the `touch` statistic when its
  // bounding box spans at least this fraction of the frame width or height.
  double touch_extent = 0.5;

  LatticeDomain frame() const;
  void validate() const;
};

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t rep);

// Runs fn(rep) for rep in [0, n) on up to `threads` workers. Each rep is
// handled by exactly one call; output order never depends on scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// Per-replicate observables of one cluster configuration.
struct ClusterObservables {
  bool touch_any = false;     // some cluster has a site on the frame's edge ring
  bool touch = false;         // ... and spans >= touch_extent of the frame
  bool crossing = false;      // one cluster meets the left and right columns
  bool spanning = false;      // one cluster meets all four sides
  std::int64_t cluster_count = 0;
  std::int64_t largest_cluster = 0;  // site count
};

ClusterObservables observe(const ClusterSet& cs, double touch_extent);

// Coupled scan over cfg.c_grid: one layered soup per replicate at max(c),
// thinned to each c. Stats: touch, touch_any, crossing, spanning (Frequency),
// cluster_count, largest_cluster (Mean).
ExperimentResult boundary_touch_scan(const ScanConfig& cfg);
ExperimentResult crossing_scan(ScanConfig cfg, double aspect);

struct CouplingViolations {
  std::int64_t replicates = 0;
  std::int64_t loop_set = 0;
  std::int64_t cluster_containment = 0;
  std::int64_t touch = 0;
  std::int64_t crossing = 0;
  std::int64_t total() const { return loop_set + cluster_containment + touch + crossing; }
};

// Exact per-replicate check that loop sets, clusters (as site sets), touch and
// crossing indicators only grow along the sorted c grid.
CouplingViolations coupling_check(const ScanConfig& cfg);

struct AnnulusConfig {
  double c = 0.5;
  int inner = 8;
  int outer = 32;
  int k_max = 10;
  int min_hits = 20;
};

// Number of distinct clusters with a site within `inner` of the frame centre
// and a site at distance >= `outer`.
int annulus_crossings(const ClusterSet& cs, Point centre, int inner, int outer);

// Rows tail_ge_<k> (Frequency) for k = 0..k_max, plus Derived rows
// tail_slope, tail_r2, tail_points from a least-squares fit of
// log frequency against k over k with >= min_hits hits.
ExperimentResult annulus_chain_tail(const AnnulusConfig& acfg, const ScanConfig& cfg);

// Superposition of independent soups at c1 and c2 against one soup at
// c1 + c2: per-(site,length) cell means, per-length count histograms, cluster
// count, largest cluster, and touch indicators.
TestReport additivity_check(double c1, double c2, const ScanConfig& cfg);

// Restriction of a frame soup to `sub` against a soup sampled on `sub`.
TestReport restriction_check(double c, const LatticeDomain& sub, const ScanConfig& cfg);

}  // namespace loopsoup::experiments
