#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "loopsoup/results.hpp"

namespace loopsoup::runner {

inline constexpr const char* kVersion = "0.4.0";
// Default output directory when neither --out nor a config entry is given.
inline constexpr const char* kOutEnv = "LOOPSOUP_OUT";

using ConfigMap = std::map<std::string, std::string>;

// Experiment subcommands accepted by run().
const std::vector<std::string>& subcommands();

// Every key a subcommand accepts, with its default. Includes seed, threads
// and out.
ConfigMap defaults(const std::string& subcommand);

// Resolved configuration: defaults, then config-file entries, then flags.
struct RunConfig {
  std::string subcommand;
  ConfigMap values;

  static RunConfig resolve(const std::string& subcommand, const ConfigMap& file = {}, const ConfigMap& flags = {});

  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::uint64_t seed() const;
  int threads() const;
  std::filesystem::path out() const;
};

// key=value lines; '#' comments and blank lines ignored.
ConfigMap parse_config(std::istream& is);
ConfigMap read_config_file(const std::filesystem::path& path);

// "lo:hi:step" inclusive grid, values rounded to 12 decimals.
std::vector<double> parse_grid(const std::string& spec);

struct RunManifest {
  std::string subcommand;
  ConfigMap config;
  std::vector<std::uint64_t> replicate_seeds;
  std::string seed_rule;
  std::string version = kVersion;
  double wall_clock_seconds = 0.0;
  std::map<std::string, std::string> digests;  // output file name -> SHA-256 hex
};

// Validates, runs the experiment, writes its files and manifest.json into
// cfg.out(). Progress and summaries go to `log`.
RunManifest run(const RunConfig& cfg, std::ostream& log);

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

// Re-runs the manifest's config into `out` and returns the names of outputs
// whose digests differ (empty when the rerun is bit-identical).
std::vector<std::string> replay(const RunManifest& m, const std::filesystem::path& out, std::ostream& log);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

// Columns c, stat, value, ci_lo, ci_hi, n.
void write_result_csv(std::ostream& os, const ExperimentResult& r);
std::string result_to_json(const ExperimentResult& r);
ExperimentResult result_from_json(const std::string& text);
ExperimentResult read_result(const std::filesystem::path& path);

// Formatted (c, kappa, boundary dim, carpet dim) table.
void write_formula_table(std::ostream& os, const std::vector<double>& grid);

}  // namespace loopsoup::runner
