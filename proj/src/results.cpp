#include "loopsoup/results.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "loopsoup/fractal.hpp"
#include "loopsoup/stats.hpp"

namespace loopsoup {

ResultRow frequency_row(double c, std::string stat, std::int64_t successes, std::int64_t n) {
  ResultRow r;
  r.c = c;
  r.stat = std::move(stat);
  r.kind = ResultRow::Kind::Frequency;
  r.sum = successes;
  r.n = n;
  r.value = n > 0 ? static_cast<double>(successes) / static_cast<double>(n) : 0.0;
  const auto ci = stats::wilson_interval(successes, n);
  r.ci_lo = ci.lo;
  r.ci_hi = ci.hi;
  return r;
}

ResultRow mean_row(double c, std::string stat, std::int64_t sum, std::int64_t sum_sq, std::int64_t n) {
  ResultRow r;
  r.c = c;
  r.stat = std::move(stat);
  r.kind = ResultRow::Kind::Mean;
  r.sum = sum;
  r.sum_sq = sum_sq;
  r.n = n;
  r.value = n > 0 ? static_cast<double>(sum) / static_cast<double>(n) : 0.0;
  const auto ci = stats::mean_interval(static_cast<double>(sum), static_cast<double>(sum_sq), n);
  r.ci_lo = ci.lo;
  r.ci_hi = ci.hi;
  return r;
}

ResultRow derived_row(double c, std::string stat, double value, double lo, double hi, std::int64_t n) {
  ResultRow r;
  r.c = c;
  r.stat = std::move(stat);
  r.kind = ResultRow::Kind::Derived;
  r.value = value;
  r.ci_lo = lo;
  r.ci_hi = hi;
  r.n = n;
  return r;
}

const ResultRow* ExperimentResult::find(double c, const std::string& stat) const {
  for (const auto& r : rows)
    if (r.c == c && r.stat == stat) return &r;
  return nullptr;
}

void ExperimentResult::sort_rows() {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.c, a.stat) < std::tie(b.c, b.stat);
  });
}

bool TestReport::all_pass() const {
  return std::all_of(tests.begin(), tests.end(), [](const TestLine& t) { return t.pass; });
}

namespace {

void finalize_annulus(ExperimentResult& r) {
  int min_hits = 20;
  if (auto it = r.config.find("min_hits"); it != r.config.end()) min_hits = std::stoi(it->second);
  std::vector<double> cs;
  for (const auto& row : r.rows)
    if (row.kind != ResultRow::Kind::Derived && std::find(cs.begin(), cs.end(), row.c) == cs.end()) cs.push_back(row.c);
  for (double c : cs) {
    std::vector<double> ks, logs;
    for (const auto& row : r.rows) {
      if (row.c != c || row.stat.rfind("tail_ge_", 0) != 0) continue;
      if (row.sum < min_hits) continue;
      ks.push_back(std::stod(row.stat.substr(8)));
      logs.push_back(std::log(row.value));
    }
    std::int64_t npts = static_cast<std::int64_t>(ks.size());
    if (ks.size() >= 2) {
      const auto fit = stats::linear_fit(ks, logs);
      r.rows.push_back(derived_row(c, "tail_slope", fit.slope, fit.slope - 1.96 * fit.slope_stderr,
                                   fit.slope + 1.96 * fit.slope_stderr, npts));
      r.rows.push_back(derived_row(c, "tail_r2", fit.r2, fit.r2, fit.r2, npts));
    }
    r.rows.push_back(derived_row(c, "tail_points", static_cast<double>(npts), static_cast<double>(npts),
                                 static_cast<double>(npts), npts));
  }
}

// Derived survival_oracle = 1 - extinction probability, per p.
void finalize_fractal(ExperimentResult& r) {
  std::vector<double> ps;
  for (const auto& row : r.rows)
    if (row.stat == "survival") ps.push_back(row.c);
  for (double p : ps) {
    const double v = 1.0 - fractal::extinction_oracle(p);
    r.rows.push_back(derived_row(p, "survival_oracle", v, v, v));
  }
}

}  // namespace

void finalize_result(ExperimentResult& r) {
  std::erase_if(r.rows, [](const ResultRow& row) { return row.kind == ResultRow::Kind::Derived; });
  if (r.experiment == "annulus") finalize_annulus(r);
  if (r.experiment == "fractal") finalize_fractal(r);
  r.sort_rows();
}

ExperimentResult merge_results(const std::vector<ExperimentResult>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("merge: no inputs");
  ExperimentResult out;
  out.experiment = inputs.front().experiment;
  out.config = inputs.front().config;
  for (const auto& in : inputs) {
    if (in.experiment != out.experiment) throw std::invalid_argument("merge: experiments differ");
    if (in.config != out.config) throw std::invalid_argument("merge: configurations differ beyond the seed");
    out.master_seeds.insert(out.master_seeds.end(), in.master_seeds.begin(), in.master_seeds.end());
  }
  std::sort(out.master_seeds.begin(), out.master_seeds.end());

  std::map<std::pair<double, std::string>, ResultRow> pooled;
  for (const auto& in : inputs) {
    for (const auto& row : in.rows) {
      if (row.kind == ResultRow::Kind::Derived) continue;
      auto [it, fresh] = pooled.try_emplace({row.c, row.stat}, row);
      if (fresh) continue;
      if (it->second.kind != row.kind) throw std::invalid_argument("merge: row kinds differ for " + row.stat);
      it->second.sum += row.sum;
      it->second.sum_sq += row.sum_sq;
      it->second.n += row.n;
    }
  }
  for (auto& [key, row] : pooled) {
    if (row.kind == ResultRow::Kind::Frequency)
      out.rows.push_back(frequency_row(row.c, row.stat, row.sum, row.n));
    else
      out.rows.push_back(mean_row(row.c, row.stat, row.sum, row.sum_sq, row.n));
  }
  finalize_result(out);
  return out;
}

}  // namespace loopsoup
