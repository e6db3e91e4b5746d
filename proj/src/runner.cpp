#include "loopsoup/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "loopsoup/capacity.hpp"
#include "loopsoup/clusters.hpp"
#include "loopsoup/experiments.hpp"
#include "loopsoup/formulas.hpp"
#include "loopsoup/fractal.hpp"
#include "loopsoup/loop_soup.hpp"

namespace loopsoup::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string default_out() {
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return "loopsoup-out";
}

const std::map<std::string, ConfigMap>& schema() {
  static const std::map<std::string, ConfigMap> s = {
      {"soup", {{"c", "1"}, {"size", "128"}, {"aspect", "1"}, {"mesh", "1"}, {"max_len", "0"}}},
      {"clusters", {{"c", "1"}, {"size", "128"}, {"aspect", "1"}, {"mesh", "1"}, {"max_len", "0"}, {"input", ""}}},
      {"scan",
       {{"c", "0.2,0.6,1.0,1.4"},
        {"size", "256"},
        {"aspect", "1"},
        {"mesh", "1"},
        {"max_len", "512"},
        {"reps", "200"},
        {"touch_extent", "0.5"}}},
      {"annulus",
       {{"c", "0.5"},
        {"size", "512"},
        {"mesh", "1"},
        {"max_len", "0"},
        {"reps", "2000"},
        {"inner", "8"},
        {"outer", "32"},
        {"k_max", "10"},
        {"min_hits", "20"}}},
      {"additivity", {{"c1", "0.5"}, {"c2", "0.5"}, {"size", "32"}, {"max_len", "0"}, {"reps", "10000"}}},
      {"restriction",
       {{"c", "1"}, {"size", "48"}, {"sub", "32"}, {"sub_x0", "-1"}, {"sub_y0", "-1"}, {"max_len", "0"}, {"reps", "10000"}}},
      {"fractal",
       {{"p", "0.3,0.5,0.9"}, {"depth", "14"}, {"samples", "10000"}, {"crossing_depth", "6"}, {"mask_depth", "8"}}},
      {"capacity",
       {{"hull", ""},
        {"slit", "1"},
        {"alpha", "1"},
        {"walks", "100000"},
        {"step_rel", "0.001"},
        {"start_factor", "1.25"},
        {"sandwich", "0"}}},
      {"formulas", {{"grid", "0:1:0.1"}}},
      {"merge", {{"inputs", ""}}},
  };
  return s;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* b = text.data();
  const char* e = b + text.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw std::invalid_argument("invalid value for '" + key + "': '" + text + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kind_name(ResultRow::Kind k) {
  switch (k) {
    case ResultRow::Kind::Frequency: return "frequency";
    case ResultRow::Kind::Mean: return "mean";
    case ResultRow::Kind::Derived: return "derived";
  }
  return "derived";
}

ResultRow::Kind kind_of(const std::string& s) {
  if (s == "frequency") return ResultRow::Kind::Frequency;
  if (s == "mean") return ResultRow::Kind::Mean;
  if (s == "derived") return ResultRow::Kind::Derived;
  throw std::invalid_argument("unknown row kind '" + s + "'");
}

std::vector<std::uint64_t> replicate_seeds(std::uint64_t master, std::int64_t n) {
  std::vector<std::uint64_t> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t r = 0; r < n; ++r) out.push_back(experiments::replicate_seed(master, static_cast<std::uint64_t>(r)));
  return out;
}

// Output files of one run, collected before digests are taken.
struct Emitted {
  std::map<std::string, std::string> files;  // name -> contents
  std::vector<std::uint64_t> seeds;
  std::string seed_rule;
};

void emit_result(Emitted& em, const ExperimentResult& r, const std::string& stem = "result") {
  std::ostringstream csv;
  write_result_csv(csv, r);
  em.files[stem + ".csv"] = csv.str();
  em.files[stem + ".json"] = result_to_json(r);
}

void emit_report(Emitted& em, const TestReport& rep) {
  std::ostringstream csv;
  csv << "test,statistic,dof,p_value,pass\n";
  json j;
  j["experiment"] = rep.experiment;
  j["all_pass"] = rep.all_pass();
  j["tests"] = json::array();
  for (const auto& t : rep.tests) {
    csv << t.name << ',' << format_double(t.statistic) << ',' << t.dof << ',' << format_double(t.p_value) << ','
        << (t.pass ? 1 : 0) << '\n';
    j["tests"].push_back({{"name", t.name}, {"statistic", t.statistic}, {"dof", t.dof}, {"p_value", t.p_value},
                          {"pass", t.pass}});
  }
  em.files["tests.csv"] = csv.str();
  em.files["tests.json"] = j.dump(2) + "\n";
}

LatticeDomain frame_of(const RunConfig& cfg) {
  const auto size = cfg.get_int("size");
  const double aspect = cfg.values.count("aspect") ? cfg.get_double("aspect") : 1.0;
  if (size < 1) throw std::invalid_argument("size must be >= 1");
  if (!(aspect > 0.0)) throw std::invalid_argument("aspect must be positive");
  const double mesh = cfg.values.count("mesh") ? cfg.get_double("mesh") : 1.0;
  return LatticeDomain(static_cast<int>(std::lround(aspect * static_cast<double>(size))), static_cast<int>(size), mesh);
}

int max_len_of(const RunConfig& cfg, const LatticeDomain& d) {
  const auto m = cfg.get_int("max_len");
  if (m == 0) return default_max_len(d);
  if (m < 2 || m % 2 != 0) throw std::invalid_argument("max_len must be even and >= 2 (or 0 for the default)");
  return static_cast<int>(m);
}

double intensity_of(const RunConfig& cfg, const std::string& key) {
  const double c = cfg.get_double(key);
  if (!(c >= 0.0)) throw std::invalid_argument(key + " must be non-negative");
  return c;
}

experiments::ScanConfig scan_config(const RunConfig& cfg, const LatticeDomain& frame, int max_len) {
  experiments::ScanConfig sc;
  sc.size = frame.height();
  sc.aspect = static_cast<double>(frame.width()) / frame.height();
  sc.mesh = frame.mesh();
  sc.max_len = max_len;
  sc.replicates = static_cast<int>(cfg.get_int("reps"));
  sc.seed = cfg.seed();
  sc.threads = cfg.threads();
  if (cfg.values.count("touch_extent")) sc.touch_extent = cfg.get_double("touch_extent");
  if (cfg.values.count("aspect")) sc.aspect = cfg.get_double("aspect");
  return sc;
}

void run_soup(const RunConfig& cfg, Emitted& em, std::ostream& log) {
  const auto frame = frame_of(cfg);
  const double c = intensity_of(cfg, "c");
  const int max_len = max_len_of(cfg, frame);
  const auto soup = sample_soup(frame, c, max_len, cfg.seed());
  std::ostringstream os;
  write_soup(os, soup);
  em.files["soup.txt"] = os.str();
  em.seeds = {cfg.seed()};
  em.seed_rule = "per-site streams keyed by (seed, x, y); per-loop streams keyed by (seed, x, y, k)";
  log << "soup: " << soup.loops.size() << " loops on " << frame.width() << "x" << frame.height() << " (max_len "
      << max_len << ")\n";
}

void run_clusters(const RunConfig& cfg, Emitted& em, std::ostream& log) {
  LoopSoup soup;
  if (const auto& input = cfg.get("input"); !input.empty()) {
    std::ifstream is(input);
    if (!is) throw std::runtime_error("cannot read soup file " + input);
    soup = read_soup(is);
    em.seeds = {soup.seed};
  } else {
    const auto frame = frame_of(cfg);
    soup = sample_soup(frame, intensity_of(cfg, "c"), max_len_of(cfg, frame), cfg.seed());
    em.seeds = {cfg.seed()};
  }
  em.seed_rule = "soup seed";
  const auto cs = build_clusters(soup);
  const auto filled = outermost(cs, soup.domain);
  std::ostringstream csv;
  csv << "id,loop_count,site_count,fill_count,outermost,touches_boundary,bbox_x0,bbox_y0,bbox_x1,bbox_y1\n";
  json records = json::array();
  for (const auto& fc : filled) {
    const auto& cl = cs.clusters[static_cast<std::size_t>(fc.id)];
    csv << fc.id << ',' << cl.loops.size() << ',' << cl.sites.size() << ',' << fc.fill.size() << ','
        << (fc.outermost ? 1 : 0) << ',' << (fc.touches_boundary ? 1 : 0) << ',' << cl.bbox.lo.x << ','
        << cl.bbox.lo.y << ',' << cl.bbox.hi.x << ',' << cl.bbox.hi.y << '\n';
    records.push_back({{"id", fc.id},
                       {"loop_count", cl.loops.size()},
                       {"site_count", cl.sites.size()},
                       {"fill_count", fc.fill.size()},
                       {"outermost", fc.outermost},
                       {"touches_boundary", fc.touches_boundary},
                       {"bbox", {cl.bbox.lo.x, cl.bbox.lo.y, cl.bbox.hi.x, cl.bbox.hi.y}}});
  }
  em.files["clusters.csv"] = csv.str();
  em.files["clusters.json"] = records.dump(2) + "\n";
  log << "clusters: " << cs.clusters.size() << " clusters from " << soup.loops.size() << " loops, "
      << std::count_if(filled.begin(), filled.end(), [](const FilledCluster& f) { return f.outermost; })
      << " outermost\n";
}

void run_scan(const RunConfig& cfg, Emitted& em, std::ostream& log) {
  const auto frame = frame_of(cfg);
  auto sc = scan_config(cfg, frame, max_len_of(cfg, frame));
  sc.c_grid = cfg.get_doubles("c");
  sc.validate();
  const auto r = experiments::boundary_touch_scan(sc);
  emit_result(em, r);
  em.seeds = replicate_seeds(sc.seed, sc.replicates);
  em.seed_rule = "replicate seed = hash(master, rep); one layered soup per replicate at max c";
  for (const auto& row : r.rows)
    if (row.stat == "touch" || row.stat == "crossing")
      log << "c=" << format_double(row.c) << ' ' << row.stat << '=' << format_double(row.value) << '\n';
}

void run_annulus(const RunConfig& cfg, Emitted& em, std::ostream& log) {
  const auto frame = frame_of(cfg);
  auto sc = scan_config(cfg, frame, max_len_of(cfg, frame));
  experiments::AnnulusConfig ac;
  ac.c = intensity_of(cfg, "c");
  ac.inner = static_cast<int>(cfg.get_int("inner"));
  ac.outer = static_cast<int>(cfg.get_int("outer"));
  ac.k_max = static_cast<int>(cfg.get_int("k_max"));
  ac.min_hits = static_cast<int>(cfg.get_int("min_hits"));
  sc.c_grid = {ac.c};
  sc.validate();
  const auto r = experiments::annulus_chain_tail(ac, sc);
  emit_result(em, r);
  em.seeds = replicate_seeds(sc.seed, sc.replicates);
  em.seed_rule = "replicate seed = hash(master, rep)";
  for (const char* s : {"tail_slope", "tail_r2", "tail_points"})
    if (const auto* row = r.find(ac.c, s)) log << s << '=' << format_double(row->value) << '\n';
}

void run_additivity(const RunConfig& cfg, Emitted& em, std::ostream& log) {
  const auto frame = frame_of(cfg);
  auto sc = scan_config(cfg, frame, max_len_of(cfg, frame));
  const double c1 = intensity_of(cfg, "c1"), c2 = intensity_of(cfg, "c2");
  sc.c_grid = {c1 + c2};
  sc.validate();
  const auto rep = experiments::additivity_check(c1, c2, sc);
  emit_report(em, rep);
  em.seeds = replicate_seeds(sc.seed, sc.replicates);
  em.seed_rule = "replicate seed = hash(master, rep); arms keyed 1, 2 (superposed) and 3 (direct)";
  log << "additivity: " << (rep.all_pass() ? "all tests pass" : "some tests fail") << " at p > 0.01\n";
}

void run_restriction(const RunConfig& cfg, Emitted& em, std::ostream& log) {
  const auto frame = frame_of(cfg);
  auto sc = scan_config(cfg, frame, max_len_of(cfg, frame));
  const double c = intensity_of(cfg, "c");
  const auto sub_side = cfg.get_int("sub");
  if (sub_side < 1 || sub_side > frame.width() || sub_side > frame.height())
    throw std::invalid_argument("sub must lie in [1, size]");
  auto x0 = cfg.get_int("sub_x0"), y0 = cfg.get_int("sub_y0");
  if (x0 < 0) x0 = (frame.width() - sub_side) / 2;
  if (y0 < 0) y0 = (frame.height() - sub_side) / 2;
  const LatticeDomain sub(static_cast<int>(sub_side), static_cast<int>(sub_side), frame.mesh(),
                          {static_cast<int>(x0), static_cast<int>(y0)});
  sc.c_grid = {c};
  sc.validate();
  const auto rep = experiments::restriction_check(c, sub, sc);
  emit_report(em, rep);
  em.seeds = replicate_seeds(sc.seed, sc.replicates);
  em.seed_rule = "replicate seed = hash(master, rep); arms keyed 1 (restricted) and 2 (direct)";
  log << "restriction: " << (rep.all_pass() ? "all tests pass" : "some tests fail") << " at p > 0.01\n";
}

void run_fractal(const RunConfig& cfg, Emitted& em, std::ostream& log) {
  const auto ps = cfg.get_doubles("p");
  for (double p : ps)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
  const auto depth = cfg.get_int("depth");
  const auto samples = cfg.get_int("samples");
  const auto cdepth = cfg.get_int("crossing_depth");
  const auto mdepth = cfg.get_int("mask_depth");
  if (ps.empty()) throw std::invalid_argument("p list is empty");
  if (depth < 1 || depth > 60) throw std::invalid_argument("depth must lie in [1, 60]");
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  const int max_stored = fractal::FractalPercolation::kMaxStoredDepth;
  if (cdepth < 1 || cdepth > max_stored) throw std::invalid_argument("crossing_depth must lie in [1, 12]");
  if (mdepth < 0 || mdepth > max_stored) throw std::invalid_argument("mask_depth must lie in [0, 12]");

  const auto seeds = replicate_seeds(cfg.seed(), samples);
  struct Out {
    std::vector<std::uint8_t> survive, cross;
    std::vector<std::int64_t> retained;
  };
  std::vector<Out> outs(static_cast<std::size_t>(samples));
  experiments::parallel_for(static_cast<int>(samples), cfg.threads(), [&](int s) {
    auto& o = outs[static_cast<std::size_t>(s)];
    for (double p : ps) {
      const auto seed = seeds[static_cast<std::size_t>(s)];
      o.survive.push_back(fractal::survives(p, static_cast<int>(depth), seed));
      const fractal::FractalPercolation fp(p, static_cast<int>(cdepth), seed);
      o.cross.push_back(fractal::crossing_exists(fp));
      o.retained.push_back(fp.retained_count(static_cast<int>(cdepth)));
    }
  });
  ExperimentResult r;
  r.experiment = "fractal";
  r.config = {{"p", cfg.get("p")},
              {"depth", std::to_string(depth)},
              {"samples", std::to_string(samples)},
              {"crossing_depth", std::to_string(cdepth)}};
  r.master_seeds = {cfg.seed()};
  for (std::size_t i = 0; i < ps.size(); ++i) {
    std::int64_t surv = 0, cross = 0, ret = 0, ret2 = 0;
    for (const auto& o : outs) {
      surv += o.survive[i];
      cross += o.cross[i];
      ret += o.retained[i];
      ret2 += o.retained[i] * o.retained[i];
    }
    r.rows.push_back(frequency_row(ps[i], "survival", surv, samples));
    r.rows.push_back(frequency_row(ps[i], "crossing", cross, samples));
    r.rows.push_back(mean_row(ps[i], "retained", ret, ret2, samples));
  }
  finalize_result(r);
  emit_result(em, r);
  if (mdepth > 0) {
    const fractal::FractalPercolation fp(ps.front(), static_cast<int>(mdepth), seeds.front());
    std::ostringstream os;
    fractal::write_pbm(os, fp, static_cast<int>(mdepth));
    em.files["mask.pbm"] = os.str();
  }
  em.seeds = seeds;
  em.seed_rule = "sample seed = hash(master, sample); U(C) = hash(sample seed, level, i, j), shared across p";
  for (const auto& row : r.rows)
    if (row.stat == "survival" || row.stat == "survival_oracle")
      log << "p=" << format_double(row.c) << ' ' << row.stat << '=' << format_double(row.value) << '\n';
}

json estimate_json(const capacity::CapacityEstimate& e) {
  return {{"alpha", e.alpha}, {"estimate", e.estimate}, {"stderr", e.stderr_}, {"walks", e.walks}};
}

void run_capacity(const RunConfig& cfg, Emitted& em, std::ostream& log) {
  capacity::Hull hull;
  if (const auto& path = cfg.get("hull"); !path.empty()) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read hull file " + path);
    hull = capacity::parse_hull(is);
  } else {
    hull = capacity::slit(cfg.get_double("slit"));
  }
  const auto alphas = cfg.get_doubles("alpha");
  if (alphas.empty()) throw std::invalid_argument("alpha list is empty");
  for (double a : alphas)
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
  capacity::WalkParams wp;
  wp.walks = cfg.get_int("walks");
  wp.step_rel = cfg.get_double("step_rel");
  wp.start_factor = cfg.get_double("start_factor");
  wp.seed = cfg.seed();
  wp.threads = cfg.threads();
  if (wp.walks < 1) throw std::invalid_argument("walks must be >= 1");
  if (!(wp.step_rel > 0.0)) throw std::invalid_argument("step_rel must be positive");
  if (!(wp.start_factor > 1.0)) throw std::invalid_argument("start_factor must exceed 1");
  const bool sandwich = cfg.get_int("sandwich") != 0;
  const bool is_hull = hull.is_hull();
  if (!is_hull) log << "warning: input is not a hull (floating piece or enclosed region)\n";

  std::ostringstream csv;
  csv << "alpha,target,estimate,stderr,walks\n";
  json j;
  j["is_hull"] = is_hull;
  j["records"] = json::array();
  auto add = [&](const std::string& target, const capacity::CapacityEstimate& e) {
    csv << format_double(e.alpha) << ',' << target << ',' << format_double(e.estimate) << ','
        << format_double(e.stderr_) << ',' << e.walks << '\n';
    auto rec = estimate_json(e);
    rec["target"] = target;
    j["records"].push_back(rec);
    log << "alpha=" << format_double(e.alpha) << ' ' << target << ": " << format_double(e.estimate) << " +- "
        << format_double(e.stderr_) << '\n';
  };
  for (double a : alphas) {
    if (!sandwich) {
      add("A", capacity::m_alpha(hull, a, wp));
      continue;
    }
    const auto rep = capacity::sandwich_check(hull, a, wp);
    add("A", rep.m_a);
    add("hat", rep.m_hat);
    capacity::CapacityEstimate sum = rep.m_unit_square;
    sum.estimate = rep.sum_squares;
    sum.stderr_ = rep.sum_squares_stderr;
    add("square_sum", sum);
    j["sandwich"].push_back({{"alpha", a},
                             {"squares", rep.square_count},
                             {"truncated", rep.truncated},
                             {"ratio_hat", rep.ratio_hat},
                             {"ratio_sum", rep.ratio_sum},
                             {"hat_upper_ok", rep.hat_upper_ok},
                             {"sum_upper_ok", rep.sum_upper_ok}});
  }
  em.files["capacity.csv"] = csv.str();
  em.files["capacity.json"] = j.dump(2) + "\n";
  em.seeds = {cfg.seed()};
  em.seed_rule = "walk w uses the stream keyed by (seed, w); shared across targets";
}

void run_formulas(const RunConfig& cfg, Emitted& em, std::ostream& log) {
  const auto grid = parse_grid(cfg.get("grid"));
  for (double c : grid)
    if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("formula grid must lie in [0,1]");
  std::ostringstream csv;
  csv << "c,kappa,boundary_dim,carpet_dim\n";
  for (double c : grid) {
    csv << format_double(c) << ',' << (c > 0.0 ? format_double(formulas::kappa_of_c(c)) : "") << ','
        << format_double(formulas::boundary_dimension(c)) << ',' << format_double(formulas::carpet_dimension(c))
        << '\n';
  }
  em.files["formulas.csv"] = csv.str();
  write_formula_table(log, grid);
}

void run_merge(const RunConfig& cfg, Emitted& em, std::ostream& log) {
  const auto paths = split(cfg.get("inputs"), ',');
  if (paths.empty()) throw std::invalid_argument("merge needs at least one input");
  std::vector<ExperimentResult> inputs;
  for (const auto& p : paths) inputs.push_back(read_result(p));
  const auto r = merge_results(inputs);
  emit_result(em, r);
  em.seeds = r.master_seeds;
  em.seed_rule = "master seeds of the pooled runs";
  log << "merged " << inputs.size() << " result files (" << r.rows.size() << " rows)\n";
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : schema()) v.push_back(k);
    return v;
  }();
  return s;
}

ConfigMap defaults(const std::string& subcommand) {
  const auto it = schema().find(subcommand);
  if (it == schema().end()) throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
  ConfigMap m = it->second;
  m["seed"] = "1";
  m["threads"] = "1";
  m["out"] = default_out();
  return m;
}

RunConfig RunConfig::resolve(const std::string& subcommand, const ConfigMap& file, const ConfigMap& flags) {
  RunConfig cfg;
  cfg.subcommand = subcommand;
  cfg.values = defaults(subcommand);
  for (const ConfigMap* layer : {&file, &flags})
    for (const auto& [k, v] : *layer) {
      if (!cfg.values.count(k)) throw std::invalid_argument("unknown key '" + k + "' for " + subcommand);
      cfg.values[k] = v;
    }
  // Common keys are checked here; experiment keys before sampling.
  if (cfg.threads() < 1) throw std::invalid_argument("threads must be >= 1");
  (void)cfg.seed();
  if (cfg.get("out").empty()) throw std::invalid_argument("output directory is empty");
  return cfg;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw std::invalid_argument("missing key '" + key + "'");
  return it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const { return parse_number<std::int64_t>(key, get(key)); }
double RunConfig::get_double(const std::string& key) const { return parse_number<double>(key, get(key)); }

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split(get(key), ',')) out.push_back(parse_number<double>(key, s));
  return out;
}

std::uint64_t RunConfig::seed() const { return parse_number<std::uint64_t>("seed", get("seed")); }

int RunConfig::threads() const {
  const auto t = get_int("threads");
  if (t < 1 || t > 4096) throw std::invalid_argument("threads must lie in [1, 4096]");
  return static_cast<int>(t);
}

fs::path RunConfig::out() const { return get("out"); }

ConfigMap parse_config(std::istream& is) {
  ConfigMap m;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    m[key] = trim(line.substr(eq + 1));
  }
  return m;
}

ConfigMap read_config_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config file " + path.string());
  return parse_config(is);
}

std::vector<double> parse_grid(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 3) throw std::invalid_argument("grid must be lo:hi:step, got '" + spec + "'");
  const double lo = parse_number<double>("grid", parts[0]), hi = parse_number<double>("grid", parts[1]),
               step = parse_number<double>("grid", parts[2]);
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("grid needs step > 0 and hi >= lo");
  const auto n = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9));
  if (n > 1000000) throw std::invalid_argument("grid has too many points");
  std::vector<double> out;
  for (std::int64_t i = 0; i <= n; ++i) out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
  return out;
}

void write_result_csv(std::ostream& os, const ExperimentResult& r) {
  os << "c,stat,value,ci_lo,ci_hi,n\n";
  for (const auto& row : r.rows)
    os << format_double(row.c) << ',' << row.stat << ',' << format_double(row.value) << ','
       << format_double(row.ci_lo) << ',' << format_double(row.ci_hi) << ',' << row.n << '\n';
}

std::string result_to_json(const ExperimentResult& r) {
  json j;
  j["experiment"] = r.experiment;
  j["config"] = r.config;
  j["master_seeds"] = r.master_seeds;
  j["rows"] = json::array();
  for (const auto& row : r.rows)
    j["rows"].push_back({{"c", row.c},
                         {"stat", row.stat},
                         {"kind", kind_name(row.kind)},
                         {"sum", row.sum},
                         {"sum_sq", row.sum_sq},
                         {"n", row.n},
                         {"value", row.value},
                         {"ci_lo", row.ci_lo},
                         {"ci_hi", row.ci_hi}});
  return j.dump(2) + "\n";
}

ExperimentResult result_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ExperimentResult r;
    r.experiment = j.at("experiment").get<std::string>();
    r.config = j.at("config").get<ConfigMap>();
    r.master_seeds = j.at("master_seeds").get<std::vector<std::uint64_t>>();
    for (const auto& row : j.at("rows")) {
      ResultRow x;
      x.c = row.at("c").get<double>();
      x.stat = row.at("stat").get<std::string>();
      x.kind = kind_of(row.at("kind").get<std::string>());
      x.sum = row.at("sum").get<std::int64_t>();
      x.sum_sq = row.at("sum_sq").get<std::int64_t>();
      x.n = row.at("n").get<std::int64_t>();
      x.value = row.at("value").get<double>();
      x.ci_lo = row.at("ci_lo").get<double>();
      x.ci_hi = row.at("ci_hi").get<double>();
      r.rows.push_back(x);
    }
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed result json: ") + e.what());
  }
}

ExperimentResult read_result(const fs::path& path) { return result_from_json(read_text(path)); }

void write_formula_table(std::ostream& os, const std::vector<double>& grid) {
  os << std::setw(8) << "c" << std::setw(14) << "kappa" << std::setw(16) << "boundary_dim" << std::setw(14)
     << "carpet_dim" << '\n';
  os << std::fixed << std::setprecision(6);
  for (double c : grid) {
    os << std::setw(8) << std::setprecision(4) << c << std::setprecision(6);
    if (c > 0.0)
      os << std::setw(14) << formulas::kappa_of_c(c);
    else
      os << std::setw(14) << "-";
    os << std::setw(16) << formulas::boundary_dimension(c) << std::setw(14) << formulas::carpet_dimension(c) << '\n';
  }
  os.unsetf(std::ios::floatfield);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

RunManifest run(const RunConfig& cfg, std::ostream& log) {
  using Handler = void (*)(const RunConfig&, Emitted&, std::ostream&);
  static const std::map<std::string, Handler> handlers = {
      {"soup", run_soup},         {"clusters", run_clusters},       {"scan", run_scan},
      {"annulus", run_annulus},   {"additivity", run_additivity},   {"restriction", run_restriction},
      {"fractal", run_fractal},   {"capacity", run_capacity},       {"formulas", run_formulas},
      {"merge", run_merge},
  };
  const auto h = handlers.find(cfg.subcommand);
  if (h == handlers.end()) throw std::invalid_argument("unknown subcommand '" + cfg.subcommand + "'");

  const fs::path out = cfg.out();
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw std::runtime_error("cannot create output directory " + out.string());
  {
    // Fail on an unwritable directory before spending time on sampling.
    const fs::path probe = out / ".write-test";
    std::ofstream t(probe);
    if (!t) throw std::runtime_error("output directory is not writable: " + out.string());
    t.close();
    fs::remove(probe, ec);
  }

  const auto t0 = std::chrono::steady_clock::now();
  Emitted em;
  h->second(cfg, em, log);
  const auto t1 = std::chrono::steady_clock::now();

  RunManifest m;
  m.subcommand = cfg.subcommand;
  m.config = cfg.values;
  m.replicate_seeds = std::move(em.seeds);
  m.seed_rule = em.seed_rule;
  m.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();
  for (const auto& [name, text] : em.files) {
    write_text(out / name, text);
    m.digests[name] = sha256_hex(text);
    log << "wrote " << (out / name).string() << '\n';
  }
  write_manifest(out / "manifest.json", m);
  return m;
}

void write_manifest(const fs::path& path, const RunManifest& m) {
  json j;
  j["tool"] = "loopsoup";
  j["version"] = m.version;
  j["subcommand"] = m.subcommand;
  j["config"] = m.config;
  j["seed_rule"] = m.seed_rule;
  j["replicate_seeds"] = m.replicate_seeds;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  j["outputs"] = m.digests;
  write_text(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const fs::path& path) {
  try {
    const json j = json::parse(read_text(path));
    RunManifest m;
    m.version = j.at("version").get<std::string>();
    m.subcommand = j.at("subcommand").get<std::string>();
    m.config = j.at("config").get<ConfigMap>();
    m.seed_rule = j.value("seed_rule", "");
    m.replicate_seeds = j.at("replicate_seeds").get<std::vector<std::uint64_t>>();
    m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    m.digests = j.at("outputs").get<std::map<std::string, std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed manifest " + path.string() + ": " + e.what());
  }
}

std::vector<std::string> replay(const RunManifest& m, const fs::path& out, std::ostream& log) {
  ConfigMap values = m.config;
  values["out"] = out.string();
  const auto cfg = RunConfig::resolve(m.subcommand, {}, values);
  const auto again = run(cfg, log);
  std::vector<std::string> bad;
  for (const auto& [name, digest] : m.digests) {
    const auto it = again.digests.find(name);
    if (it == again.digests.end() || it->second != digest) bad.push_back(name);
  }
  for (const auto& [name, digest] : again.digests)
    if (!m.digests.count(name)) bad.push_back(name);
  return bad;
}

}  // namespace loopsoup::runner
