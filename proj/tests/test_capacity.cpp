#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "loopsoup/capacity.hpp"
#include "loopsoup/stats.hpp"

using namespace loopsoup::capacity;

namespace {

WalkParams quick(std::int64_t walks = 40000, std::uint64_t seed = 1) {
  WalkParams p;
  p.walks = walks;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("hull mini-format") {
  const auto h = parse_hull("# two pieces\nseg 0 0 0 1\n\nbox -1 0.5 -0.5 2  # a box\n");
  REQUIRE(h.pieces().size() == 2);
  CHECK(h.pieces()[0].kind == Piece::Kind::Segment);
  CHECK(h.pieces()[1].kind == Piece::Kind::Box);
  CHECK(h.pieces()[1].a == Vec2{-1, 0.5});
  std::ostringstream os;
  write_hull(os, h);
  CHECK(os.str() == "seg 0 0 0 1\nbox -1 0.5 -0.5 2\n");
  CHECK(parse_hull(os.str()) == h);
  CHECK_THROWS(parse_hull("seg 0 0 0\n"));
  CHECK_THROWS(parse_hull("tri 0 0 1 1\n"));
  CHECK_THROWS(parse_hull("seg 0 -1 0 1\n"));
  CHECK_THROWS(parse_hull("seg 0 0 0 1 5\n"));
  CHECK(parse_hull("").empty());
}

TEST_CASE("distances and chord hits") {
  const auto s = Piece::segment({0, 0}, {0, 2});
  CHECK(s.distance({3, 1}) == doctest::Approx(3));
  CHECK(s.distance({0, 5}) == doctest::Approx(3));
  CHECK(s.first_hit({-1, 1}, {1, 1}) == doctest::Approx(0.5));
  CHECK(s.first_hit({1, 1}, {2, 1}) < 0);
  CHECK(s.first_hit({0, 3}, {0, 1}) == doctest::Approx(0.5));  // collinear
  const auto b = Piece::box({1, 1}, {2, 2});
  CHECK(b.distance({1.5, 1.5}) == 0);
  CHECK(b.distance({4, 2}) == doctest::Approx(2));
  CHECK(b.distance({3, 3}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(b.first_hit({0, 1.5}, {4, 1.5}) == doctest::Approx(0.25));
  CHECK(b.first_hit({1.5, 1.5}, {4, 1.5}) == 0);
  CHECK(b.first_hit({0, 0}, {0.5, 3}) < 0);
}

TEST_CASE("hull condition flags") {
  CHECK(slit(1).is_hull());
  CHECK(parse_hull("seg 0 0 0 1.3\nseg 0 1.3 0.7 1.9\nseg 0.7 1.9 -0.4 1.1\n").is_hull());
  CHECK(parse_hull("box 0 0 1 1\nseg 0.5 1 2 3\n").is_hull());
  CHECK_FALSE(parse_hull("seg 0 1 0 2\n").is_hull());                            // floating
  CHECK_FALSE(parse_hull("seg 0 0 0 1\nseg 0 1 1 1\nseg 1 1 1 0\n").is_hull());   // arch over the axis
  CHECK_FALSE(parse_hull("box 0 0 3 1\nbox 0 2 3 3\nbox 0 0 1 3\nbox 2 0 3 3\n").is_hull());  // enclosed hole
}

TEST_CASE("empty hull has capacity 0") {
  const auto e = m_alpha(Hull{}, 1.0, quick(10));
  CHECK(e.estimate == 0.0);
  CHECK(e.stderr_ == 0.0);
  CHECK_THROWS(m_alpha(Hull{}, 0.0, quick(10)));
}

TEST_CASE("slit capacity is y^2/4") {
  const auto e = m_alpha(slit(1.0), 1.0, quick(200000, 5));
  CHECK(std::abs(e.estimate - 0.25) < 0.03 * 0.25);
  CHECK(std::abs(e.estimate - 0.25) < 4 * e.stderr_);
  CHECK(e.stderr_ > 0.0);
  CHECK(e.walks == 200000);
  // Horizontal translation does not change the estimate: geometry is centred.
  const auto moved = m_alpha(slit(1.0, 7.5), 1.0, quick(200000, 5));
  CHECK(moved.estimate == doctest::Approx(e.estimate).epsilon(1e-12));
}

TEST_CASE("estimates are reproducible across thread counts") {
  auto p = quick(20000, 9);
  const auto a = m_alpha(slit(2.0), 0.6, p);
  p.threads = 3;
  const auto b = m_alpha(slit(2.0), 0.6, p);
  CHECK(a.estimate == b.estimate);
  CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("scaling M(2A) = 4 M(A) at alpha = 1") {
  const auto a = m_alpha(slit(1.0), 1.0, quick(200000, 11));
  const auto b = m_alpha(slit(2.0), 1.0, quick(200000, 12));
  CHECK(b.estimate / a.estimate == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("tiling membership") {
  const auto pt = tiling_of(parse_hull("seg 0.5 1.5 0.5 1.5\n"));
  REQUIRE(pt.squares.size() == 1);
  CHECK(pt.squares[0].a == 0);
  CHECK(pt.squares[0].j == 0);
  CHECK_FALSE(pt.truncated);

  const auto tall = tiling_of(parse_hull("box 0 1 1 3\n"));
  std::set<int> levels;
  for (const auto& s : tall.squares) levels.insert(s.j);
  CHECK(levels == std::set<int>{0, 1});

  // Points on a square's lower edge belong to that square, not the one below.
  const auto edge = tiling_of(parse_hull("seg 0.2 2 0.3 2\n"));
  REQUIRE(edge.squares.size() == 1);
  CHECK(edge.squares[0].j == 1);

  const auto sl = tiling_of(slit(1.0));
  CHECK(sl.truncated);
  CHECK(sl.squares.size() == 13);  // levels -12 .. 0 along x = 0
  CHECK(tiling_of(slit(1.0), -4).squares.size() == 5);

  // A box takes the squares its interior overlaps.
  const auto box = tiling_of(parse_hull("box 0.5 1 2 2\n"));
  CHECK(box.squares == std::vector<HyperbolicSquare>{{0, 0}, {1, 0}});
}

TEST_CASE("hat A covers A") {
  for (const char* text : {"seg 0 0 0 1.3\nseg 0 1.3 0.7 1.9\n", "box -0.3 0.2 0.9 0.7\n", "seg -2 0.1 3 2.5\n"}) {
    const auto h = parse_hull(text);
    const auto t = tiling_of(h);
    // Dense samples along every piece lie in some square of the tiling.
    for (const auto& p : h.pieces())
      for (int i = 0; i <= 200; ++i)
        for (int k = 0; k <= (p.kind == Piece::Kind::Box ? 20 : 0); ++k) {
          const double u = i / 200.0, v = k / 20.0;
          Vec2 z = p.kind == Piece::Kind::Box ? Vec2{p.a.x + u * (p.b.x - p.a.x), p.a.y + v * (p.b.y - p.a.y)}
                                              : Vec2{p.a.x + u * (p.b.x - p.a.x), p.a.y + u * (p.b.y - p.a.y)};
          if (z.y < std::ldexp(1.0, -12)) continue;
          CHECK(t.hat.distance(z) == 0.0);
        }
  }
}

TEST_CASE("union of squares: M(A) equals M(hat A) exactly") {
  const Hull a = HyperbolicSquare{3, -1}.region().united(HyperbolicSquare{1, 0}.region());
  const auto t = tiling_of(a);
  REQUIRE(t.hat.pieces().size() == 2);
  const auto r = sandwich_check(a, 0.5, quick(20000));
  CHECK(r.m_a.estimate == r.m_hat.estimate);
  CHECK(r.ratio_hat == 1.0);
}

TEST_CASE("sandwich bounds on a polyline hull") {
  const auto h = parse_hull("seg 0 0 0 1.3\nseg 0 1.3 0.7 1.9\nseg 0.7 1.9 -0.4 1.1\n");
  for (double alpha : {0.3, 1.0}) {
    const auto r = sandwich_check(h, alpha, quick(30000, 4));
    CHECK(r.hat_upper_ok);
    CHECK(r.sum_upper_ok);
    CHECK(r.m_a.estimate < r.m_hat.estimate);
    CHECK(r.m_hat.estimate < r.sum_squares);
    CHECK(r.truncated);
  }
}

TEST_CASE("monotonicity and subadditivity") {
  const auto p = quick(30000, 8);
  const auto nested = monotonicity_subadditivity_check(slit(1.0), slit(2.0), 0.7, p);
  CHECK(nested.monotone_ok);
  CHECK(nested.m_a.estimate < nested.m_b.estimate);
  CHECK(nested.pathwise_violations == 0);
  // The union equals the larger slit, so the walks give the same values.
  CHECK(nested.m_union.estimate == doctest::Approx(nested.m_b.estimate).epsilon(1e-12));

  const auto disjoint = monotonicity_subadditivity_check(slit(1.0, -1.0), slit(1.0, 1.0), 0.7, p);
  CHECK(disjoint.pathwise_violations == 0);
  CHECK(disjoint.subadditive_ok);
  CHECK(disjoint.m_union.estimate < disjoint.m_a.estimate + disjoint.m_b.estimate);

  const auto same = monotonicity_subadditivity_check(slit(1.0), slit(1.0), 0.7, p);
  CHECK(same.m_a.estimate == same.m_b.estimate);
  CHECK(same.m_union.estimate == same.m_a.estimate);
}

TEST_CASE("column over square ratio does not depend on the level") {
  std::vector<double> ratios;
  for (int j = -2; j <= 2; ++j) {
    const HyperbolicSquare s{0, j};
    const auto ms = m_alpha(s.region(), 0.6, quick(20000, 20 + j));
    const auto mr = m_alpha(s.column(), 0.6, quick(20000, 40 + j));
    ratios.push_back(mr.estimate / ms.estimate);
  }
  double mean = 0;
  for (double r : ratios) mean += r / ratios.size();
  for (double r : ratios) CHECK(std::abs(r / mean - 1.0) < 0.1);
}

TEST_CASE("parameter validation") {
  WalkParams p = quick(100);
  p.start_radius = 0.5;  // inside the slit's radius
  CHECK_THROWS(m_alpha(slit(1.0), 1.0, p));
  p = quick(0);
  CHECK_THROWS(m_alpha(slit(1.0), 1.0, p));
  CHECK_THROWS(m_alpha(slit(1.0), 1.5, quick(100)));
  CHECK_THROWS(slit(0.0));
}
