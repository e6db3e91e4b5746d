#include "loopsoup/loop_soup.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace loopsoup {

Rational exact_return_probability(int n) {
  if (n < 0) throw std::invalid_argument("step count must be non-negative");
  if (n > kExactReturnMax) throw std::invalid_argument("exact return probability only up to 16 steps");
  if (n % 2 != 0) return {0, 1};
  // q_n = (C(n, n/2) / 2^n)^2
  std::uint64_t binom = 1;
  const int m = n / 2;
  for (int k = 1; k <= m; ++k) binom = binom * static_cast<std::uint64_t>(m + k) / static_cast<std::uint64_t>(k);
  std::uint64_t num = binom * binom;
  std::uint64_t den = std::uint64_t{1} << (2 * n);
  const std::uint64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

double return_probability(int n) {
  if (n < 0) throw std::invalid_argument("step count must be non-negative");
  if (n % 2 != 0) return 0.0;
  if (n <= kExactReturnMax) return exact_return_probability(n).value();
  // a_m = C(2m, m) / 4^m via a_m = a_{m-1} (2m - 1) / (2m)
  double a = 1.0;
  for (int k = 1; k <= n / 2; ++k) a *= static_cast<double>(2 * k - 1) / static_cast<double>(2 * k);
  return a * a;
}

LoopMassTable::LoopMassTable(int max_len) : max_len_(max_len) {
  if (max_len < 2 || max_len % 2 != 0) throw std::invalid_argument("max_len must be even and >= 2");
  const std::size_t count = static_cast<std::size_t>(max_len / 2);
  q_.reserve(count);
  lambda_.reserve(count);
  cumulative_.reserve(count);
  double a = 1.0;
  double acc = 0.0;
  for (std::size_t k = 1; k <= count; ++k) {
    const int len = static_cast<int>(2 * k);
    a *= static_cast<double>(2 * k - 1) / static_cast<double>(2 * k);
    const double q = len <= kExactReturnMax ? exact_return_probability(len).value() : a * a;
    q_.push_back(q);
    lambda_.push_back(q / len);
    acc += q / len;
    cumulative_.push_back(acc);
  }
}

std::size_t LoopMassTable::half_index(int len) const {
  if (len < 2 || len % 2 != 0 || len > max_len_) throw std::out_of_range("length not in mass table");
  return static_cast<std::size_t>(len / 2 - 1);
}

int LoopMassTable::draw_length(double u) const {
  const double target = u * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end()) --it;
  return length_at(static_cast<std::size_t>(it - cumulative_.begin()));
}

Point Loop::displacement() const {
  Point d{0, 0};
  for (Dir s : steps) d = d + step_of(s);
  return d;
}

bool Loop::inside(const LatticeDomain& d) const {
  bool ok = true;
  for_each_site([&](Point p) { ok = ok && d.contains(p); });
  return ok;
}

BBox Loop::bbox() const {
  BBox b;
  for_each_site([&](Point p) { b.add(p); });
  return b;
}

Loop sample_bridge(Point root, int length, Stream& rng) {
  if (length < 2 || length % 2 != 0) throw std::invalid_argument("bridge length must be even and >= 2");
  Loop loop;
  loop.root = root;
  loop.steps.resize(static_cast<std::size_t>(length));
  int u_up = length / 2;
  int v_up = length / 2;
  for (int left = length; left > 0; --left) {
    const bool du = rng.uniform() * left < u_up;
    const bool dv = rng.uniform() * left < v_up;
    u_up -= du;
    v_up -= dv;
    // (du, dv): (+,+) E, (+,-) N, (-,-) W, (-,+) S
    Dir d = du ? (dv ? Dir::E : Dir::N) : (dv ? Dir::S : Dir::W);
    loop.steps[static_cast<std::size_t>(length - left)] = d;
  }
  return loop;
}

LoopSoup LoopSoup::at_intensity(double c) const {
  if (c < 0.0 || c > intensity_c) throw std::invalid_argument("intensity outside the sampled layer range");
  LoopSoup out;
  out.intensity_c = c;
  out.domain = domain;
  out.max_len = max_len;
  out.seed = seed;
  for (const Loop& l : loops)
    if (l.arrival <= c) out.loops.push_back(l);
  return out;
}

LoopSoup sample_soup(const LatticeDomain& domain, double c, const LoopMassTable& table, std::uint64_t seed) {
  if (!(c >= 0.0)) throw std::invalid_argument("intensity must be non-negative");
  LoopSoup soup;
  soup.intensity_c = c;
  soup.domain = domain;
  soup.max_len = table.max_len();
  soup.seed = seed;
  if (c == 0.0) return soup;
  const double mean = c * table.total();
  for (std::size_t idx = 0; idx < domain.size(); ++idx) {
    const Point x = domain.point(idx);
    const auto kx = static_cast<std::uint64_t>(static_cast<std::int64_t>(x.x));
    const auto ky = static_cast<std::uint64_t>(static_cast<std::int64_t>(x.y));
    Stream site_rng(seed, {kx, ky});
    std::poisson_distribution<int> count_dist(mean);
    const int n = count_dist(site_rng);
    for (int k = 0; k < n; ++k) {
      const int len = table.draw_length(site_rng.uniform());
      const double arrival = c * site_rng.uniform_pos();
      Stream loop_rng(seed, {kx, ky, static_cast<std::uint64_t>(k) + 1});
      Loop loop = sample_bridge(x, len, loop_rng);
      if (!loop.inside(domain)) continue;
      loop.arrival = arrival;
      soup.loops.push_back(std::move(loop));
    }
  }
  return soup;
}

LoopSoup sample_soup(const LatticeDomain& domain, double c, int max_len, std::uint64_t seed) {
  return sample_soup(domain, c, LoopMassTable(max_len), seed);
}

LoopSoup restrict_soup(const LoopSoup& soup, const LatticeDomain& sub) {
  if (!soup.domain.contains(sub)) throw std::invalid_argument("restriction domain is not a subset of the soup domain");
  LoopSoup out;
  out.intensity_c = soup.intensity_c;
  out.domain = sub;
  out.max_len = soup.max_len;
  out.seed = soup.seed;
  for (const Loop& l : soup.loops)
    if (l.inside(sub)) out.loops.push_back(l);
  return out;
}

LoopSoup superpose(const LoopSoup& a, const LoopSoup& b) {
  if (!(a.domain == b.domain)) throw std::invalid_argument("superpose: domains differ");
  if (a.max_len != b.max_len) throw std::invalid_argument("superpose: max_len differs");
  LoopSoup out;
  out.domain = a.domain;
  out.max_len = a.max_len;
  out.intensity_c = a.intensity_c + b.intensity_c;
  out.seed = derive_seed(a.seed, {b.seed});
  out.loops = a.loops;
  out.loops.reserve(a.loops.size() + b.loops.size());
  // b's layer sits on top of a's, so at_intensity(a.intensity_c) recovers a.
  for (Loop l : b.loops) {
    l.arrival += a.intensity_c;
    out.loops.push_back(std::move(l));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_soup(std::ostream& os, const LoopSoup& soup) {
  const auto& d = soup.domain;
  os << "#soup c=" << format_double(soup.intensity_c) << " W=" << d.width() << " H=" << d.height()
     << " mesh=" << format_double(d.mesh()) << " maxlen=" << soup.max_len << " seed=" << soup.seed;
  if (d.offset() != Point{0, 0}) os << " x0=" << d.offset().x << " y0=" << d.offset().y;
  os << '\n';
  std::string dirs;
  for (const Loop& l : soup.loops) {
    dirs.clear();
    for (Dir s : l.steps) dirs.push_back(to_char(s));
    os << l.root.x << ' ' << l.root.y << ' ' << dirs << '\n';
  }
}

namespace {

std::unordered_map<std::string, std::string> parse_header(const std::string& line) {
  if (line.rfind("#soup", 0) != 0) throw std::runtime_error("soup file: missing #soup header");
  std::unordered_map<std::string, std::string> kv;
  std::istringstream is(line.substr(5));
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::runtime_error("soup file: malformed header field '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"c", "W", "H", "mesh", "maxlen", "seed"})
    if (!kv.count(key)) throw std::runtime_error(std::string("soup file: header lacks ") + key);
  return kv;
}

}  // namespace

LoopSoup read_soup(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("soup file: empty input");
  auto kv = parse_header(line);
  LoopSoup soup;
  soup.intensity_c = std::stod(kv["c"]);
  Point off{0, 0};
  if (kv.count("x0")) off.x = std::stoi(kv["x0"]);
  if (kv.count("y0")) off.y = std::stoi(kv["y0"]);
  soup.domain = LatticeDomain(std::stoi(kv["W"]), std::stoi(kv["H"]), std::stod(kv["mesh"]), off);
  soup.max_len = std::stoi(kv["maxlen"]);
  soup.seed = std::stoull(kv["seed"]);
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Loop l;
    std::string dirs;
    if (!(ls >> l.root.x >> l.root.y >> dirs)) throw std::runtime_error("soup file: malformed loop line '" + line + "'");
    l.steps.reserve(dirs.size());
    for (char ch : dirs) l.steps.push_back(dir_from_char(ch));
    if (l.length() < 2 || l.length() % 2 != 0 || l.displacement() != Point{0, 0})
      throw std::runtime_error("soup file: loop does not close: '" + line + "'");
    if (!l.inside(soup.domain)) throw std::runtime_error("soup file: loop leaves the domain: '" + line + "'");
    soup.loops.push_back(std::move(l));
  }
  return soup;
}

int default_max_len(const LatticeDomain& d, int cap) {
  const std::size_t full = 2 * d.size();
  const std::size_t capped = std::min<std::size_t>(full, static_cast<std::size_t>(cap));
  return static_cast<int>(capped - capped % 2);
}

}  // namespace loopsoup
