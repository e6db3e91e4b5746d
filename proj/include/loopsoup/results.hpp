#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace loopsoup {

// One (c, statistic) row of an experiment. Frequency and Mean rows carry
// integer sufficient statistics so pooling across runs is exact; Derived rows
// are recomputed from the others after pooling.
struct ResultRow {
  enum class Kind { Frequency, Mean, Derived };

  double c = 0.0;
  std::string stat;
  Kind kind = Kind::Frequency;
  std::int64_t sum = 0;     // successes (Frequency) or sum of values (Mean)
  std::int64_t sum_sq = 0;  // Mean only
  std::int64_t n = 0;
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

ResultRow frequency_row(double c, std::string stat, std::int64_t successes, std::int64_t n);
ResultRow mean_row(double c, std::string stat, std::int64_t sum, std::int64_t sum_sq, std::int64_t n);
ResultRow derived_row(double c, std::string stat, double value, double lo = 0.0, double hi = 0.0, std::int64_t n = 0);

struct ExperimentResult {
  std::string experiment;
  // Resolved configuration, excluding the master seed and thread count.
  std::map<std::string, std::string> config;
  std::vector<std::uint64_t> master_seeds;
  std::vector<ResultRow> rows;  // sorted by (c, stat)

  const ResultRow* find(double c, const std::string& stat) const;
  void sort_rows();
};

struct TestLine {
  std::string name;
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  bool pass = true;
};

struct TestReport {
  std::string experiment;
  std::vector<TestLine> tests;
  bool all_pass() const;
};

// Pools results whose configs agree. Frequency/Mean rows are summed; Derived
// rows are recomputed by the experiment's finalizer. Throws on config or
// experiment mismatch.
ExperimentResult merge_results(const std::vector<ExperimentResult>& inputs);

// Recomputes Derived rows (e.g. the annulus tail fit) from pooled rows.
void finalize_result(ExperimentResult& r);

}  // namespace loopsoup
