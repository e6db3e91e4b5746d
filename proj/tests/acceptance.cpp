// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "loopsoup/capacity.hpp"
#include "loopsoup/clusters.hpp"
#include "loopsoup/experiments.hpp"
#include "loopsoup/formulas.hpp"
#include "loopsoup/fractal.hpp"
#include "loopsoup/loop_soup.hpp"
#include "loopsoup/runner.hpp"
#include "loopsoup/stats.hpp"
#include "oracles.hpp"

using namespace loopsoup;
namespace fs = std::filesystem;

namespace {

int g_threads = 1;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

// Exact closed-walk counts from the origin, by enumeration.
std::uint64_t closed_walk_count(int n) {
  std::uint64_t count = 0;
  const std::uint64_t total = 1ULL << (2 * n);
  for (std::uint64_t code = 0; code < total; ++code) {
    Point p{0, 0};
    for (int i = 0; i < n; ++i) p = p + step_of(static_cast<Dir>((code >> (2 * i)) & 3));
    count += p == Point{0, 0};
  }
  return count;
}

void formulas_exact(Outcome& o) {
  using namespace formulas;
  o.require(std::abs(c_of_kappa(4.0) - 1.0) < 1e-15, "c(4) = 1");
  o.require(std::abs(c_of_kappa(3.0) - 0.5) < 1e-15, "c(3) = 1/2");
  o.require(std::abs(carpet_dimension(1.0) - 15.0 / 8.0) < 1e-15, "carpet(1) = 15/8");
  o.require(std::abs(boundary_dimension(0.0) - 4.0 / 3.0) < 1e-15, "boundary(0) = 4/3");
  double worst_rt = 0, worst_bd = 0;
  for (int i = 1; i <= 100; ++i) {
    const double c = i / 100.0;
    const double k = 8.0 / 3.0 + (4.0 - 8.0 / 3.0) * i / 100.0;
    worst_rt = std::max({worst_rt, std::abs(c_of_kappa(kappa_of_c(c)) - c), std::abs(kappa_of_c(c_of_kappa(k)) - k)});
    worst_bd = std::max(worst_bd, std::abs(boundary_dimension(c) - (1.0 + kappa_of_c(c) / 8.0)));
  }
  o.require(worst_rt < 1e-12, "round trip");
  o.require(worst_bd < 1e-12, "boundary = 1 + kappa/8");
  o.detail << "round-trip err " << fmt(worst_rt, 3) << ", boundary err " << fmt(worst_bd, 3);
}

void sampler_exactness(Outcome& o) {
  for (int n : {2, 4, 6}) {
    const std::uint64_t count = closed_walk_count(n);
    const std::uint64_t total = 1ULL << (2 * n);
    const std::uint64_t g = std::gcd(count, total);
    o.require(exact_return_probability(n) == Rational{count / g, total / g}, "q" + std::to_string(n) + " enumeration");
  }
  o.require(exact_return_probability(2) == Rational{1, 4}, "q2 = 1/4");
  o.require(exact_return_probability(4) == Rational{9, 64}, "q4 = 9/64");
  o.require(exact_return_probability(6) == Rational{25, 256}, "q6 = 25/256");

  std::map<std::string, std::int64_t> counts;
  for (std::uint64_t code = 0; code < 256; ++code) {
    Point p{0, 0};
    std::string s;
    for (int i = 0; i < 4; ++i) {
      const Dir d = static_cast<Dir>((code >> (2 * i)) & 3);
      p = p + step_of(d);
      s += to_char(d);
    }
    if (p == Point{0, 0}) counts[s] = 0;
  }
  o.require(counts.size() == 36, "36 closed 4-walks");
  Stream rng(2024, {4});
  for (int i = 0; i < 100000; ++i) {
    const Loop l = sample_bridge({0, 0}, 4, rng);
    std::string s;
    for (Dir d : l.steps) s += to_char(d);
    auto it = counts.find(s);
    if (it == counts.end()) {
      o.require(false, "bridge produced a non-closed walk");
      return;
    }
    ++it->second;
  }
  std::vector<std::int64_t> v;
  for (const auto& [k, c] : counts) v.push_back(c);
  const auto chi = stats::chi_square_uniform(v);
  o.require(chi.p_value > 0.01, "bridge uniformity");
  o.detail << "q2,q4,q6 exact; chi2 " << fmt(chi.statistic, 4) << " dof " << chi.dof << " p " << fmt(chi.p_value, 3);
}

void report_tests(Outcome& o, const TestReport& r) {
  for (const auto& t : r.tests) {
    o.require(t.p_value > 0.01, t.name);
    o.detail << t.name << " p=" << fmt(t.p_value, 3) << "; ";
  }
  o.require(!r.tests.empty(), "no tests ran");
}

void additivity(Outcome& o) {
  experiments::ScanConfig cfg;
  cfg.size = 32;
  cfg.max_len = default_max_len(cfg.frame());
  cfg.replicates = 10000;
  cfg.seed = 101;
  cfg.threads = g_threads;
  report_tests(o, experiments::additivity_check(0.5, 0.5, cfg));
}

void restriction(Outcome& o) {
  experiments::ScanConfig cfg;
  cfg.size = 48;
  cfg.max_len = default_max_len(cfg.frame());
  cfg.replicates = 10000;
  cfg.seed = 202;
  cfg.threads = g_threads;
  report_tests(o, experiments::restriction_check(1.0, LatticeDomain(32, 32, 1.0, {8, 8}), cfg));
}

void coupling(Outcome& o) {
  experiments::ScanConfig cfg;
  cfg.size = 64;
  cfg.max_len = 256;
  cfg.replicates = 1000;
  cfg.seed = 303;
  cfg.threads = g_threads;
  const auto v = experiments::coupling_check(cfg);
  o.require(v.replicates == 1000, "replicate count");
  o.require(v.total() == 0, "violations");
  o.detail << v.replicates << " replicates; violations loop_set " << v.loop_set << " cluster " << v.cluster_containment
           << " touch " << v.touch << " crossing " << v.crossing;
}

void phase_scan(Outcome& o) {
  experiments::ScanConfig cfg;
  cfg.size = 256;
  cfg.max_len = 512;
  cfg.replicates = 200;
  cfg.c_grid = {0.2, 0.6, 1.0, 1.4};
  cfg.seed = 404;
  cfg.threads = g_threads;
  const auto r = experiments::boundary_touch_scan(cfg);
  double prev = -1, first = 0, last = 0;
  for (double c : cfg.c_grid) {
    const double f = r.find(c, "touch")->value;
    o.require(f >= prev, "nondecreasing at c=" + fmt(c));
    if (c == cfg.c_grid.front()) first = f;
    last = f;
    prev = f;
    o.detail << "c=" << fmt(c) << ":" << fmt(f, 4) << " (any edge " << fmt(r.find(c, "touch_any")->value, 4) << ") ";
  }
  o.require(last - first > 0.5, "separation > 0.5");
  o.detail << "diff " << fmt(last - first, 4);
}

void annulus(Outcome& o) {
  experiments::ScanConfig cfg;
  cfg.size = 512;
  cfg.max_len = default_max_len(cfg.frame());
  cfg.replicates = 2000;
  cfg.seed = 505;
  cfg.threads = g_threads;
  experiments::AnnulusConfig a;
  a.c = 0.5;
  a.inner = 8;
  a.outer = 32;
  a.k_max = 10;
  a.min_hits = 20;
  const auto r = experiments::annulus_chain_tail(a, cfg);
  for (int k = 0; k <= a.k_max; ++k) {
    const auto* row = r.find(0.5, "tail_ge_" + std::to_string(k));
    if (row->sum == 0) break;
    o.detail << "k" << k << ":" << row->sum << " ";
  }
  const auto* slope = r.find(0.5, "tail_slope");
  const auto* r2 = r.find(0.5, "tail_r2");
  o.require(slope && r2, "fit needs >= 2 points with >= 20 hits");
  if (!slope || !r2) return;
  o.require(slope->value < 0, "negative slope");
  o.require(r2->value >= 0.9, "r2 >= 0.9");
  o.detail << "slope " << fmt(slope->value, 4) << " r2 " << fmt(r2->value, 4) << " points " << slope->n;
}

void fractal_percolation(Outcome& o) {
  double worst = 0;
  for (int i = 0; i < 50; ++i) worst = std::max(worst, std::abs(fractal::extinction_oracle(0.25 * i / 49.0) - 1.0));
  o.require(worst <= 1e-9, "extinction = 1 for p <= 1/4");
  o.detail << "max |q-1| on p<=1/4: " << fmt(worst, 3) << "; ";
  const int n = 10000;
  for (double p : {0.3, 0.5, 0.9}) {
    std::vector<char> alive(n, 0);
    experiments::parallel_for(n, g_threads, [&](int i) {
      alive[static_cast<std::size_t>(i)] = fractal::survives(p, 14, experiments::replicate_seed(606, static_cast<std::uint64_t>(i)));
    });
    const double freq = std::accumulate(alive.begin(), alive.end(), 0.0) / n;
    const double expect = 1.0 - fractal::extinction_oracle(p);
    const double sigma = std::sqrt(expect * (1 - expect) / n);
    const double z = sigma > 0 ? (freq - expect) / sigma : 0.0;
    o.require(std::abs(z) <= 3.0, "survival within 3 sigma at p=" + fmt(p));
    o.detail << "p=" << fmt(p) << " mc " << fmt(freq, 4) << " oracle " << fmt(expect, 4) << " z " << fmt(z, 3) << "; ";
  }
}

// A polyline of three segments rooted on the real axis that passes the hull check.
capacity::Hull random_hull(Stream& rng) {
  for (;;) {
    std::vector<capacity::Piece> pieces;
    capacity::Vec2 at{rng.uniform() * 2.0 - 1.0, 0.0};
    for (int s = 0; s < 3; ++s) {
      const capacity::Vec2 next{at.x + (rng.uniform() - 0.5) * 1.6, 0.2 + rng.uniform() * 1.6};
      pieces.push_back(capacity::Piece::segment(at, next));
      at = next;
    }
    capacity::Hull h(pieces);
    if (h.is_hull()) return h;
  }
}

void capacity_suite(Outcome& o) {
  using namespace capacity;
  WalkParams p;
  p.threads = g_threads;

  p.walks = 1000000;
  p.seed = 707;
  const auto slit1 = m_alpha(slit(1.0), 1.0, p);
  const double rel = std::abs(slit1.estimate - 0.25) / 0.25;
  o.require(rel < 0.03, "slit within 3%");
  o.detail << "slit " << fmt(slit1.estimate, 5) << " +- " << fmt(slit1.stderr_, 2) << " (rel err " << fmt(rel, 3) << "); ";

  p.walks = 200000;
  for (double alpha : {0.3, 0.6, 1.0}) {
    std::vector<double> xs, ys;
    for (double a : {0.5, 1.0, 2.0, 4.0}) {
      p.seed = 708 + static_cast<std::uint64_t>(a * 8);
      const auto e = m_alpha(slit(a), alpha, p);
      xs.push_back(std::log(a));
      ys.push_back(std::log(e.estimate));
    }
    const auto fit = stats::linear_fit(xs, ys);
    const double err = std::abs(fit.slope - (alpha + 1)) / (alpha + 1);
    o.require(err < 0.05, "scaling exponent at alpha=" + fmt(alpha));
    o.detail << "alpha " << fmt(alpha) << " exponent " << fmt(fit.slope, 4) << "; ";
  }

  // Random hulls: sandwich bounds and pathwise subadditivity against a shifted copy.
  Stream rng(709, {0});
  p.walks = 50000;
  int sandwich_ok = 0, ensembles_clean = 0;
  std::int64_t violations = 0;
  const double alphas[] = {0.3, 0.6, 1.0};
  for (int i = 0; i < 20; ++i) {
    const Hull a = random_hull(rng);
    const Hull b = random_hull(rng).translated(rng.uniform() * 2.0 - 1.0);
    const double alpha = alphas[i % 3];
    p.seed = 710 + static_cast<std::uint64_t>(i);
    const auto s = sandwich_check(a, alpha, p);
    sandwich_ok += s.hat_upper_ok && s.sum_upper_ok;
    const auto m = monotonicity_subadditivity_check(a, b, alpha, p);
    violations += m.pathwise_violations;
    ensembles_clean += m.pathwise_violations == 0;
  }
  o.require(sandwich_ok == 20, "sandwich bounds on all 20 hulls");
  o.require(violations == 0, "pathwise subadditivity");
  o.detail << "sandwich ok " << sandwich_ok << "/20, clean ensembles " << ensembles_clean << "/20; ";

  p.walks = 100000;
  std::vector<double> ratios;
  for (int j = -2; j <= 2; ++j) {
    const HyperbolicSquare sq{0, j};
    p.seed = 730 + static_cast<std::uint64_t>(j + 2);
    const auto ms = m_alpha(sq.region(), 0.6, p);
    p.seed = 740 + static_cast<std::uint64_t>(j + 2);
    const auto mr = m_alpha(sq.column(), 0.6, p);
    ratios.push_back(mr.estimate / ms.estimate);
  }
  const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size());
  double spread = 0;
  for (double r : ratios) spread = std::max(spread, std::abs(r / mean - 1.0));
  o.require(spread < 0.1, "column/square ratio constant within 10%");
  o.detail << "R(S)/S mean " << fmt(mean, 4) << " max dev " << fmt(spread, 3) << "; ";

  // Bias report: unit slit across alpha, relative to the alpha = 1 value.
  p.walks = 200000;
  p.seed = 750;
  const auto ens = run_ensemble({slit(1.0)}, 1.0, p);
  o.detail << "alpha=1 bias " << fmt(ens.estimate(0).estimate / 0.25 - 1.0, 3);
}

void geometry_oracles(Outcome& o) {
  int soups = 0, clusters = 0;
  std::uint64_t seed = 800;
  while (soups < 100) {
    const LatticeDomain d(22 + static_cast<int>(seed % 5), 16 + static_cast<int>(seed % 7));
    const auto s = sample_soup(d, 0.15 + 0.1 * static_cast<double>(seed % 5), 32, seed);
    ++seed;
    const auto cs = build_clusters(s);
    if (cs.clusters.size() > 50) continue;
    ++soups;
    const auto expect = testing::brute_clusters(s);
    std::set<std::set<Point>> want(expect.begin(), expect.end()), got;
    for (const auto& c : cs.clusters) got.insert(std::set<Point>(c.sites.begin(), c.sites.end()));
    o.require(want == got, "cluster partition, seed " + std::to_string(seed - 1));

    const auto all = outermost(cs, d);
    std::vector<std::set<Point>> fills;
    std::vector<std::vector<Point>> sites;
    for (const auto& fc : all) {
      sites.push_back(cs.clusters[static_cast<std::size_t>(fc.id)].sites);
      fills.push_back(testing::brute_fill(sites.back(), d));
      o.require(std::set<Point>(fc.fill.begin(), fc.fill.end()) == fills.back(), "fill");
    }
    const auto outer = testing::brute_outermost(sites, fills);
    for (std::size_t i = 0; i < all.size(); ++i) {
      o.require(all[i].outermost == outer[i], "outermost");
      const auto loop = trace_outer_boundary(all[i]);
      o.require(std::set<Point>(loop.points.begin(), loop.points.end()) == testing::brute_boundary(fills[i]), "boundary trace");
      ++clusters;
    }
    if (!o.pass) return;
  }
  o.detail << soups << " soups, " << clusters << " clusters checked";
}

fs::path scratch_root() {
  const char* env = std::getenv(runner::kOutEnv);
  return env ? fs::path(env) / "acceptance" : fs::temp_directory_path() / "loopsoup-acceptance";
}

// Digests of every output except the manifest, which records wall-clock time.
std::map<std::string, std::string> outputs_of(const runner::RunConfig& cfg) {
  std::ostringstream log;
  fs::remove_all(cfg.out());
  const auto m = runner::run(cfg, log);
  std::map<std::string, std::string> digests;
  for (const auto& entry : fs::directory_iterator(cfg.out())) {
    const auto name = entry.path().filename().string();
    if (name != "manifest.json") digests[name] = runner::sha256_file(entry.path());
  }
  return digests;
}

void determinism(Outcome& o) {
  const std::vector<std::pair<std::string, runner::ConfigMap>> runs{
      {"soup", {{"size", "48"}, {"c", "1.2"}}},
      {"clusters", {{"size", "48"}, {"c", "0.8"}}},
      {"scan", {{"size", "40"}, {"max_len", "64"}, {"reps", "24"}}},
      {"annulus", {{"size", "64"}, {"inner", "4"}, {"outer", "16"}, {"reps", "40"}, {"max_len", "128"}}},
      {"additivity", {{"size", "12"}, {"reps", "200"}}},
      {"restriction", {{"size", "16"}, {"sub", "10"}, {"reps", "200"}}},
      {"fractal", {{"p", "0.6"}, {"depth", "8"}, {"samples", "200"}}},
      {"capacity", {{"walks", "4000"}, {"alpha", "0.5,1"}, {"sandwich", "1"}}},
      {"formulas", {}},
  };
  const fs::path root = scratch_root();
  int compared = 0;
  for (const auto& [sub, base] : runs) {
    std::vector<std::map<std::string, std::string>> digests;
    int variant = 0;
    for (const char* threads : {"1", "1", "4"}) {
      auto flags = base;
      flags["seed"] = "909";
      flags["threads"] = threads;
      flags["out"] = (root / (sub + "-" + std::to_string(variant++))).string();
      digests.push_back(outputs_of(runner::RunConfig::resolve(sub, {}, flags)));
    }
    const bool same = !digests[0].empty() && digests[0] == digests[1] && digests[0] == digests[2];
    o.require(same, sub + " outputs differ");
    compared += static_cast<int>(digests[0].size());
  }
  o.detail << runs.size() << " subcommands, " << compared << " files identical across reruns and 1 vs 4 threads";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::vector<int> only;
  app.add_option("--threads", g_threads, "worker threads")->check(CLI::Range(1, 4096));
  app.add_option("--only", only, "run only these criteria (1-11)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"formula suite", formulas_exact},
      {"sampler exactness", sampler_exactness},
      {"superposition additivity", additivity},
      {"restriction", restriction},
      {"monotone coupling", coupling},
      {"boundary-touch scan", phase_scan},
      {"annulus crossing tail", annulus},
      {"fractal percolation", fractal_percolation},
      {"capacity suite", capacity_suite},
      {"geometry oracles", geometry_oracles},
      {"determinism", determinism},
  };

  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++ran;
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[i].first << " (" << fmt(secs, 4)
              << " s): " << o.detail.str() << std::endl;
  }
  std::cout << "acceptance: " << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
