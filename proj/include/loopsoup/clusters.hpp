#pragma once

#include <span>
#include <vector>

#include "loopsoup/lattice.hpp"
#include "loopsoup/loop_soup.hpp"

namespace loopsoup {

struct Cluster {
  std::vector<int> loops;    // ascending loop indices
  std::vector<Point> sites;  // visited sites, row-major order
  BBox bbox;
};

// Partition of a soup's loops into intersection clusters. Two loops are
// adjacent when they visit a common lattice site.
struct ClusterSet {
  LatticeDomain domain;
  std::vector<int> assignment;  // loop index -> cluster id
  std::vector<Cluster> clusters;
  std::vector<int> site_label;  // domain site index -> cluster id, or -1

  int label_at(Point p) const { return domain.contains(p) ? site_label[domain.index(p)] : -1; }
  bool touches_boundary(int id) const;
  // Cluster with a site in column x0 and a site in column x0+W-1.
  bool crosses_left_right(int id) const;
};

// Union-find over loops keyed on a dense site -> first-loop table. Cluster ids
// are ordered by their smallest loop index.
ClusterSet build_clusters(const LoopSoup& soup);

// Throws std::logic_error if the partition or adjacency invariants fail.
void check_cluster_invariants(const LoopSoup& soup, const ClusterSet& cs);

struct FilledCluster {
  int id = -1;
  std::vector<Point> fill;  // row-major order
  bool outermost = true;
  bool touches_boundary = false;
  BBox bbox;
};

// Sites of the frame not reachable from outside the frame by 4-neighbour
// moves through sites absent from `sites`. `sites` must lie in the frame.
std::vector<Point> fill_sites(std::span<const Point> sites, const LatticeDomain& frame);

FilledCluster fill(const ClusterSet& cs, int id, const LatticeDomain& frame);

// Every cluster with its fill; outermost is false when the cluster lies in
// another cluster's fill.
std::vector<FilledCluster> outermost(const ClusterSet& cs, const LatticeDomain& frame);

// Closed contour of the fill's outer boundary.
struct BoundaryLoop {
  std::vector<Point> points;  // cyclic; last point is 8-adjacent to the first

  bool closed() const;
  bool simple() const;
};

// Moore-neighbour trace, counter-clockwise, from the lexicographically
// minimal fill site, stopping when the initial (site, backtrack) state
// recurs. Pinch sites of the fill are visited once per pass. Throws on an
// empty fill.
BoundaryLoop trace_outer_boundary(const FilledCluster& fc);
BoundaryLoop trace_outer_boundary(std::span<const Point> fill);

struct BoxCountResult {
  double estimate = 0.0;
  double r2 = 0.0;
  std::vector<int> scales;
  std::vector<long long> counts;
};

// Least-squares slope of log N(eps) against log(1/eps), boxes anchored at the
// point set's minimal corner. Needs >= 3 scales, each >= 2.
BoxCountResult box_counting_dimension(std::span<const Point> points, std::span<const int> scales);

}  // namespace loopsoup
