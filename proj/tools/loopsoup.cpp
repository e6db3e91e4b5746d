#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "loopsoup/runner.hpp"

namespace rn = loopsoup::runner;

namespace {

const std::map<std::string, std::string> kHelp = {
    {"c", "loop-soup intensity (comma list for scan)"},
    {"c1", "intensity of the first superposed soup"},
    {"c2", "intensity of the second superposed soup"},
    {"size", "lattice height in sites"},
    {"aspect", "width / height"},
    {"mesh", "lattice mesh"},
    {"max_len", "largest loop length, 0 picks a size-based default"},
    {"reps", "replicates"},
    {"touch_extent", "fraction of the frame a touching cluster must span"},
    {"inner", "annulus inner radius"},
    {"outer", "annulus outer radius"},
    {"k_max", "largest chain count tabulated"},
    {"min_hits", "minimum hits for a tail point to enter the fit"},
    {"sub", "side of the restriction square"},
    {"sub_x0", "restriction square corner x, -1 centres it"},
    {"sub_y0", "restriction square corner y, -1 centres it"},
    {"input", "read the soup from this file instead of sampling"},
    {"p", "retention probabilities (comma list)"},
    {"depth", "survival depth"},
    {"samples", "fractal samples"},
    {"crossing_depth", "level at which crossings are checked"},
    {"mask_depth", "level of the exported PBM mask, 0 disables it"},
    {"hull", "hull file (seg/box lines)"},
    {"slit", "height of the vertical slit used when no hull file is given"},
    {"alpha", "capacity exponents (comma list)"},
    {"walks", "Brownian walks per estimate"},
    {"step_rel", "Gaussian step near targets, relative to the hull radius"},
    {"start_factor", "launch radius over hull radius"},
    {"sandwich", "1 adds the tiling upper bounds"},
    {"grid", "c grid lo:hi:step"},
    {"inputs", "comma-separated result.json files"},
    {"seed", "master seed"},
    {"threads", "worker threads"},
    {"out", std::string("output directory (default $") + rn::kOutEnv + " or ./loopsoup-out)"},
};

std::string flag_names(const std::string& key) {
  std::string names = "--" + key;
  if (key.find('_') != std::string::npos) {
    std::string dashed = key;
    for (auto& ch : dashed)
      if (ch == '_') ch = '-';
    names += ",--" + dashed;
  }
  return names;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-walk loop soups, clusters, fractal percolation and capacity estimates"};
  app.set_version_flag("--version", std::string(rn::kVersion));
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> raw;
  std::map<std::string, std::map<std::string, CLI::Option*>> opts;
  std::map<std::string, std::string> config_paths;

  const std::map<std::string, std::string> about{
      {"soup", "sample a loop soup and write it as text"},
      {"clusters", "cluster a soup (sampled or --input) and describe each cluster"},
      {"scan", "boundary-touch and crossing frequencies over a c grid"},
      {"annulus", "tail of the number of clusters crossing an annulus"},
      {"additivity", "superposed soups against one soup at the summed intensity"},
      {"restriction", "restricted frame soup against a soup sampled on the subdomain"},
      {"fractal", "fractal percolation survival and crossing"},
      {"capacity", "Monte Carlo capacity of a hull"},
      {"formulas", "kappa and dimension table over a c grid"},
      {"merge", "pool result.json files from runs with different seeds"},
  };
  for (const auto& sub : rn::subcommands()) {
    auto* sc = app.add_subcommand(sub, about.count(sub) ? about.at(sub) : std::string{});
    for (const auto& [key, def] : rn::defaults(sub)) {
      const auto help = kHelp.count(key) ? kHelp.at(key) : key;
      opts[sub][key] = sc->add_option(flag_names(key), raw[sub][key], help + " [" + def + "]");
    }
    sc->add_option("--config", config_paths[sub], "key=value file; flags override it");
  }
  auto* rp = app.add_subcommand("replay", "re-run a manifest and compare output digests");
  std::string manifest_path, replay_out;
  rp->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
  rp->add_option("--out", replay_out, "directory for the re-run outputs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (rp->parsed()) {
      const auto m = rn::read_manifest(manifest_path);
      const auto bad = rn::replay(m, replay_out, std::cerr);
      if (!bad.empty()) {
        for (const auto& b : bad) std::cerr << "loopsoup: digest mismatch: " << b << '\n';
        return 3;
      }
      std::cout << "replay reproduced " << m.digests.size() << " output digests\n";
      return 0;
    }
    for (const auto& sub : rn::subcommands()) {
      if (!app.got_subcommand(sub)) continue;
      rn::ConfigMap file, flags;
      if (!config_paths[sub].empty()) file = rn::read_config_file(config_paths[sub]);
      for (const auto& [key, opt] : opts[sub])
        if (opt->count() > 0) flags[key] = raw[sub][key];
      const auto cfg = rn::RunConfig::resolve(sub, file, flags);
      const auto m = rn::run(cfg, std::cout);
      std::cout << "manifest " << (cfg.out() / "manifest.json").string() << " (" << m.wall_clock_seconds << " s)\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "loopsoup: invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "loopsoup: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
