#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "mrnom/error.hpp"
#include "mrnom/morphology.hpp"
#include "mrnom/watershed.hpp"
#include "support/oracles.hpp"

using namespace mrnom;

namespace {

bool is_frame(int x, int y, int w, int h) { return x == 0 || y == 0 || x == w - 1 || y == h - 1; }

void check_frame_only(const BinaryMask& s, const BinaryMask& fg) {
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x)
      CHECK(s(x, y) == (is_frame(x, y, s.width(), s.height()) && !fg(x, y) ? 1 : 0));
}

struct Case {
  GrayMap w;
  BinaryMask fg;
  LabelMap seeds;
};

Case random_case(std::mt19937& rng) {
  std::uniform_int_distribution<int> side(3, 16);
  std::uniform_int_distribution<int> level(0, 12);
  std::uniform_int_distribution<int> nmark(1, 4);
  const int w = side(rng);
  const int h = side(rng);
  Case c{GrayMap(w, h), BinaryMask(w, h), LabelMap(w, h)};
  for (double& v : c.w.data()) v = level(rng);
  const bool all_fg = std::uniform_int_distribution<int>(0, 3)(rng) == 0;
  for (auto& f : c.fg.data()) f = all_fg || std::uniform_int_distribution<int>(0, 9)(rng) < 7 ? 1 : 0;
  std::uniform_int_distribution<int> px(0, w - 1);
  std::uniform_int_distribution<int> py(0, h - 1);
  const int k = nmark(rng);
  for (int attempts = 0, placed = 0; placed < k && attempts < 200; ++attempts) {
    const int x = px(rng);
    const int y = py(rng);
    if (!c.fg(x, y) || c.seeds(x, y)) continue;
    c.seeds(x, y) = ++placed;
  }
  return c;
}

BinaryMask nonzero(const LabelMap& lb) {
  BinaryMask m(lb.width(), lb.height());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = lb[i] != 0 ? 1 : 0;
  return m;
}

LabelMap oracle_watershed(const GrayMap& w_imposed, const LabelMap& seeds, const BinaryMask& fg) {
  LabelMap lb = oracle::priority_flood(w_imposed, seeds);
  for (std::size_t i = 0; i < lb.size(); ++i)
    if (!fg[i]) lb[i] = 0;
  return oracle::compact(lb);
}

}  // namespace

TEST_CASE("build_w") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayMap r(12, 10);
  for (double& v : r.data()) v = u(rng);
  SUBCASE("gradient-free tile") {
    const GrayMap w = build_w(r, GrayMap(12, 10, 0.0), 0.15);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == 1.0 - r[i]);
  }
  SUBCASE("alpha1 zero") {
    GrayMap gm(12, 10);
    for (double& v : gm.data()) v = u(rng);
    const GrayMap w = build_w(r, gm, 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == doctest::Approx(1.0 - r[i]));
  }
  SUBCASE("standardisation factor") {
    // mean(1 - r) = 0.8 and mean(gm) = 0.1 give a gradient weight of 0.15 * 8.
    const GrayMap flat(10, 10, 0.2);
    GrayMap gm(10, 10, 0.0);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 5; ++x) gm(x, y) = 0.2;
    const GrayMap w = build_w(flat, gm, 0.15);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] - 0.8 == doctest::Approx(1.2 * gm[i]));
  }
  SUBCASE("inputs outside [0,1] are rejected") {
    GrayMap bad = r;
    bad[0] = 1.5;
    CHECK_THROWS_AS(build_w(bad, GrayMap(12, 10, 0.0), 0.15), Error);
  }
}

TEST_CASE("skiz") {
  SUBCASE("single disc") {
    const BinaryMask fg = oracle::disc(60, 50, 30, 25, 10);
    check_frame_only(skiz(fg), fg);
  }
  SUBCASE("empty foreground") {
    const BinaryMask fg(40, 30);
    check_frame_only(skiz(fg), fg);
  }
  SUBCASE("two discs on one row") {
    BinaryMask fg = oracle::disc(100, 100, 20, 50, 8);
    const BinaryMask b = oracle::disc(100, 100, 60, 50, 8);
    for (std::size_t i = 0; i < fg.size(); ++i) fg[i] |= b[i];
    const BinaryMask s = skiz(fg);
    for (int y = 1; y < 99; ++y) {
      int hits = 0;
      for (int x = 1; x < 99; ++x)
        if (s(x, y)) {
          ++hits;
          CHECK(std::abs(x - 40) <= 1);
        }
      CHECK(hits == 1);
    }
    for (std::size_t i = 0; i < s.size(); ++i)
      if (fg[i]) CHECK(s[i] == 0);
  }
}

TEST_CASE("skiz separates influence zones") {
  std::mt19937 rng(8);
  for (int t = 0; t < 30; ++t) {
    BinaryMask fg(40, 40);
    std::uniform_real_distribution<double> c(6.0, 34.0);
    for (int k = 0; k < 3; ++k) {
      const BinaryMask d = oracle::disc(40, 40, c(rng), c(rng), 3.0);
      for (std::size_t i = 0; i < fg.size(); ++i) fg[i] |= d[i];
    }
    const BinaryMask s = skiz(fg);
    BinaryMask open(40, 40);
    for (std::size_t i = 0; i < open.size(); ++i) open[i] = s[i] ? 0 : 1;
    const LabelMap comps = connected_components(fg, Connectivity::Eight);
    const LabelMap regions = connected_components(open, Connectivity::Four);
    std::map<std::int32_t, std::int32_t> owner;
    for (std::size_t i = 0; i < fg.size(); ++i) {
      if (!fg[i]) continue;
      auto [it, fresh] = owner.emplace(regions[i], comps[i]);
      CHECK(it->second == comps[i]);
    }
  }
}

TEST_CASE("impose_minima examples") {
  std::mt19937 rng(2);
  std::uniform_int_distribution<int> level(0, 50);
  SUBCASE("minima everywhere") {
    GrayMap w(9, 7);
    for (double& v : w.data()) v = level(rng);
    const GrayMap out = impose_minima(w, BinaryMask(9, 7, 1));
    for (double v : out.data()) CHECK(v == 0.0);
  }
  SUBCASE("single minimum in a bowl") {
    GrayMap w(15, 15);
    for (int y = 0; y < 15; ++y)
      for (int x = 0; x < 15; ++x) w(x, y) = (x - 7) * (x - 7) + (y - 7) * (y - 7);
    BinaryMask m(15, 15);
    m(3, 4) = 1;
    CHECK(oracle::regional_extrema(impose_minima(w, m), Connectivity::Four, true) == m);
  }
  SUBCASE("two of three basins") {
    GrayMap w(30, 10);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 30; ++x) {
        double v = 1e9;
        for (int cx : {5, 15, 25}) v = std::min(v, double((x - cx) * (x - cx) + (y - 5) * (y - 5)));
        w(x, y) = v;
      }
    CHECK(oracle::component_count(oracle::regional_extrema(w, Connectivity::Four, true), Connectivity::Four) == 3);
    BinaryMask m(30, 10);
    m(5, 5) = 1;
    m(25, 5) = 1;
    const BinaryMask rmin = oracle::regional_extrema(impose_minima(w, m), Connectivity::Four, true);
    CHECK(oracle::component_count(rmin, Connectivity::Four) == 2);
    CHECK(rmin == m);
  }
  SUBCASE("no seeds") { CHECK_THROWS_AS(impose_minima(GrayMap(4, 4), BinaryMask(4, 4)), Error); }
}

TEST_CASE("impose_minima regional minima equal the imposed set") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> side(4, 24);
  std::uniform_int_distribution<int> level(0, 30);
  for (int t = 0; t < 100; ++t) {
    const int w = side(rng);
    const int h = side(rng);
    GrayMap img(w, h);
    for (double& v : img.data()) v = level(rng);
    BinaryMask m(w, h);
    std::uniform_int_distribution<int> k(1, 6);
    const int n = k(rng);
    for (int i = 0; i < n; ++i) m(std::uniform_int_distribution<int>(0, w - 1)(rng), std::uniform_int_distribution<int>(0, h - 1)(rng)) = 1;
    CHECK(oracle::regional_extrema(impose_minima(img, m), Connectivity::Four, true) == m);
  }
}

TEST_CASE("watershed examples") {
  SUBCASE("one marker in one blob") {
    const BinaryMask fg = oracle::disc(20, 20, 10, 10, 6);
    GrayMap w(20, 20, 5.0);
    LabelMap seeds(20, 20);
    seeds(10, 10) = 1;
    BinaryMask m(20, 20);
    m(10, 10) = 1;
    const LabelMap lb = watershed(impose_minima(w, m), seeds, fg);
    for (std::size_t i = 0; i < lb.size(); ++i) CHECK(lb[i] == (fg[i] ? 1 : 0));
  }
  SUBCASE("dumbbell split at the neck") {
    BinaryMask fg = oracle::disc(16, 16, 4, 7, 3.2);
    const BinaryMask right = oracle::disc(16, 16, 11, 7, 3.2);
    for (std::size_t i = 0; i < fg.size(); ++i) fg[i] |= right[i];
    for (int x = 4; x <= 11; ++x) fg(x, 7) = 1;
    GrayMap w(16, 16);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        w(x, y) = std::round(100.0 * std::min(std::hypot(x - 4, y - 7), std::hypot(x - 11, y - 7)));
    LabelMap seeds(16, 16);
    seeds(4, 7) = 1;
    seeds(11, 7) = 2;
    BinaryMask m(16, 16);
    m(4, 7) = m(11, 7) = 1;
    const GrayMap imposed = impose_minima(w, m);
    const LabelMap lb = watershed(imposed, seeds, fg);
    CHECK(lb == oracle_watershed(imposed, seeds, fg));
    CHECK(max_label(lb) == 2);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        if (!fg(x, y)) continue;
        if (x <= 6) CHECK(lb(x, y) == 1);
        if (x >= 9) CHECK(lb(x, y) == 2);
      }
  }
  SUBCASE("labels never cross the skiz") {
    BinaryMask fg = oracle::disc(60, 30, 15, 15, 8);
    const BinaryMask b = oracle::disc(60, 30, 45, 15, 8);
    for (std::size_t i = 0; i < fg.size(); ++i) fg[i] |= b[i];
    const GrayMap w(60, 30, 100.0);
    MarkerSet markers{60, 30, {{15, 15}, {45, 15}}};
    GrayMap r_mk(60, 30, 0.0);
    for (std::size_t i = 0; i < r_mk.size(); ++i) r_mk[i] = fg[i] ? 200.0 : 0.0;
    const OverSegmentation os = over_segment(r_mk, GrayMap(60, 30, 0.0), fg, markers);
    CHECK(max_label(os.lb) == 2);
    CHECK(os.lb(15, 15) != os.lb(45, 15));
    for (std::size_t i = 0; i < fg.size(); ++i) CHECK((os.lb[i] != 0) == (fg[i] != 0));
  }
}

TEST_CASE("watershed matches the priority-flood oracle") {
  std::mt19937 rng(42);
  for (int t = 0; t < 100; ++t) {
    Case c = random_case(rng);
    if (max_label(c.seeds) == 0) continue;
    const GrayMap imposed = impose_minima(c.w, nonzero(c.seeds));
    const LabelMap lb = watershed(imposed, c.seeds, c.fg);
    CHECK(lb == oracle_watershed(imposed, c.seeds, c.fg));
  }
}

TEST_CASE("watershed partitions the foreground and keeps seeds") {
  std::mt19937 rng(9);
  for (int t = 0; t < 100; ++t) {
    Case c = random_case(rng);
    const int k = max_label(c.seeds);
    if (k == 0) continue;
    const LabelMap lb = watershed(impose_minima(c.w, nonzero(c.seeds)), c.seeds, c.fg);
    for (std::size_t i = 0; i < lb.size(); ++i) CHECK((lb[i] != 0) == (c.fg[i] != 0));
    CHECK(max_label(lb) == k);
    std::set<std::int32_t> seen;
    for (std::size_t i = 0; i < lb.size(); ++i)
      if (c.seeds[i]) seen.insert(lb[i]);
    CHECK(static_cast<int>(seen.size()) == k);
  }
}

TEST_CASE("watershed rejects an unseeded minimum") {
  GrayMap w(5, 1);
  w[0] = 0;
  w[1] = 3;
  w[2] = 5;
  w[3] = 3;
  w[4] = 0;
  LabelMap seeds(5, 1);
  seeds[0] = 1;
  CHECK_THROWS_AS(watershed(w, seeds, BinaryMask(5, 1, 1)), Error);
}
