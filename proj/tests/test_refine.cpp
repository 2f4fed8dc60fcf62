#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "mrnom/error.hpp"
#include "mrnom/merge.hpp"
#include "mrnom/morphology.hpp"
#include "mrnom/refine.hpp"
#include "support/oracles.hpp"

using namespace mrnom;

namespace {

std::set<std::int32_t> labels_of(const LabelMap& lb) {
  std::set<std::int32_t> s;
  for (std::int32_t v : lb.data())
    if (v) s.insert(v);
  return s;
}

BinaryMask mask_of(const LabelMap& lb, std::int32_t l) {
  BinaryMask m(lb.width(), lb.height());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = lb[i] == l ? 1 : 0;
  return m;
}

std::map<std::pair<std::int32_t, std::int32_t>, std::set<std::pair<int, int>>> edges(const LabelMap& lb) {
  std::map<std::pair<std::int32_t, std::int32_t>, std::set<std::pair<int, int>>> out;
  for (const auto& a : build_adjacency(lb))
    for (const Point& p : a.e.pixels) out[{a.a, a.b}].insert({p.x, p.y});
  return out;
}

ForestModel constant_filter(double p1) {
  ForestModel m;
  m.kind = "filter";
  m.n_features = kFilterFeatures;
  m.feature_names = filter_feature_names();
  m.trees.push_back(DecisionTree{{TreeNode{-1, 0.0, -1, -1, p1}}});
  return m;
}

struct DebrisTile {
  LabelMap lb;
  LabelMap gt;
  GrayMap i1;
  GrayMap gm;
  std::vector<std::int32_t> cells;
  std::vector<std::int32_t> debris;
};

// Dark disc cells plus thin, bent debris strands, each its own label; GT holds only the cells.
DebrisTile debris_tile(std::mt19937& rng) {
  const int w = 200;
  const int h = 200;
  DebrisTile t{LabelMap(w, h), LabelMap(w, h), GrayMap(w, h, 205.0, {0.0, 255.0}), GrayMap(w, h, 0.05, {0.0, 1.0}), {}, {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 5.0);
  BinaryMask taken(w, h);
  std::int32_t next = 0;
  auto free_box = [&](int x0, int y0, int x1, int y1) {
    for (int y = std::max(0, y0 - 3); y <= std::min(h - 1, y1 + 3); ++y)
      for (int x = std::max(0, x0 - 3); x <= std::min(w - 1, x1 + 3); ++x)
        if (taken(x, y)) return false;
    return true;
  };
  for (int attempt = 0; attempt < 400 && t.cells.size() < 8; ++attempt) {
    const double r = 8.0 + 6.0 * u(rng);
    const double cx = r + 2 + u(rng) * (w - 2 * r - 4);
    const double cy = r + 2 + u(rng) * (h - 2 * r - 4);
    if (!free_box(int(cx - r), int(cy - r), int(cx + r), int(cy + r))) continue;
    const BinaryMask d = oracle::disc(w, h, cx, cy, r);
    ++next;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d[i]) {
        t.lb[i] = t.gt[i] = next;
        t.i1[i] = 80.0;
        taken[i] = 1;
      }
    t.cells.push_back(next);
  }
  for (int attempt = 0; attempt < 400 && t.debris.size() < 8; ++attempt) {
    const int len = 22 + static_cast<int>(u(rng) * 12);
    const int x0 = static_cast<int>(u(rng) * (w - len - 4)) + 2;
    const int y0 = static_cast<int>(u(rng) * (h - len - 4)) + 2;
    if (!free_box(x0, y0, x0 + len, y0 + len)) continue;
    ++next;
    const bool bend = u(rng) < 0.5;
    for (int k = 0; k < len; ++k) {
      const int x = x0 + k;
      const int y = bend && k > len / 2 ? y0 + (k - len / 2) : y0;
      for (int dy = 0; dy < 2; ++dy) {
        t.lb(x, y + dy) = next;
        t.i1(x, y + dy) = 120.0;
        taken(x, y + dy) = 1;
      }
    }
    t.debris.push_back(next);
  }
  for (double& v : t.i1.data()) v = std::clamp(v + noise(rng), 0.0, 255.0);
  return t;
}

}  // namespace

TEST_CASE("postprocess_labels") {
  SUBCASE("small hole is filled") {
    LabelMap lb(30, 30);
    const BinaryMask d = oracle::disc(30, 30, 15, 15, 9);
    for (std::size_t i = 0; i < d.size(); ++i) lb[i] = d[i];
    lb(15, 15) = lb(16, 15) = lb(15, 16) = 0;
    const LabelMap out = postprocess_labels(lb);
    CHECK(out(15, 15) == 1);
    CHECK(out(16, 15) == 1);
    CHECK(out(15, 16) == 1);
  }
  SUBCASE("labels under 70 pixels are removed") {
    LabelMap lb(40, 20);
    for (int y = 2; y < 12; ++y)
      for (int x = 2; x < 7; ++x) lb(x, y) = 1;  // 50 px
    for (int y = 2; y < 14; ++y)
      for (int x = 20; x < 32; ++x) lb(x, y) = 2;
    const LabelMap out = postprocess_labels(lb);
    CHECK(labels_of(out) == std::set<std::int32_t>{1});
    CHECK(out(25, 5) == 1);
    CHECK(out(3, 3) == 0);
  }
  SUBCASE("clean disc is unchanged") {
    LabelMap lb(40, 40);
    const BinaryMask d = oracle::disc(40, 40, 20, 20, 12);
    for (std::size_t i = 0; i < d.size(); ++i) lb[i] = d[i];
    CHECK(postprocess_labels(lb) == lb);
  }
  SUBCASE("detached fragments of a label are removed") {
    LabelMap lb(60, 40);
    const BinaryMask d = oracle::disc(60, 40, 15, 20, 10);
    const BinaryMask frag = oracle::disc(60, 40, 45, 20, 4);
    for (std::size_t i = 0; i < d.size(); ++i) lb[i] = d[i] || frag[i] ? 1 : 0;
    for (int x = 30; x < 40; ++x) lb(x, 2) = 1;
    const LabelMap out = postprocess_labels(lb);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == d[i]);
  }
}

TEST_CASE("Chan-Vese recovers noise-free discs") {
  SplitMix64 g(77);
  for (int t = 0; t < 20; ++t) {
    const double r = 10.0 + 20.0 * g.uniform();
    const int side = static_cast<int>(2 * r) + 30;
    const double cx = side / 2.0 + g.uniform() - 0.5;
    const double cy = side / 2.0 + g.uniform() - 0.5;
    GrayMap img(side, side, 0.0, {0.0, 255.0});
    BinaryMask truth(side, side);
    BinaryMask init(side, side);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        const double d = std::hypot(x - cx, y - cy);
        truth(x, y) = d <= r;
        init(x, y) = d <= r - 2.0;
        img(x, y) = d <= r ? 80.0 : 200.0;
      }
    const BinaryMask m = chan_vese(img, init, {});
    CAPTURE(r);
    CHECK(oracle::hausdorff(oracle::boundary_pixels(m), oracle::boundary_pixels(truth)) <= 1.0);
  }
}

TEST_CASE("Chan-Vese on a constant image only shrinks by curvature") {
  LabelMap lb(80, 60);
  const BinaryMask a = oracle::disc(80, 60, 22, 30, 11);
  const BinaryMask b = oracle::disc(80, 60, 56, 30, 14);
  for (std::size_t i = 0; i < lb.size(); ++i) lb[i] = a[i] ? 1 : (b[i] ? 2 : 0);
  const LabelMap out = chan_vese_refine(lb, GrayMap(80, 60, 150.0, {0.0, 255.0}));
  CHECK(labels_of(out) == labels_of(lb));
  for (std::int32_t l : {1, 2}) {
    const BinaryMask before = mask_of(lb, l);
    const BinaryMask after = mask_of(out, l);
    for (std::size_t i = 0; i < after.size(); ++i)
      if (after[i]) CHECK(before[i] == 1);
    CHECK(static_cast<double>(count(after)) >= 0.8 * static_cast<double>(count(before)));
  }
}

TEST_CASE("touching cells keep their shared boundary") {
  GrayMap img(80, 50, 205.0, {0.0, 255.0});
  const BinaryMask left = oracle::disc(80, 50, 28, 25, 13);
  const BinaryMask right = oracle::disc(80, 50, 50, 25, 13);
  LabelMap lb(80, 50);
  for (int y = 0; y < 50; ++y)
    for (int x = 0; x < 80; ++x) {
      if (left(x, y) || right(x, y)) img(x, y) = 75.0;
      // Initial labels sit 2 px inside the dark region and split it at x = 39.
      const bool in_left = std::hypot(x - 28, y - 25) <= 11;
      const bool in_right = std::hypot(x - 50, y - 25) <= 11;
      if (in_left || in_right) lb(x, y) = x < 39 ? 1 : 2;
    }
  const LabelMap out = chan_vese_refine(lb, img);
  const auto before = edges(lb);
  const auto after = edges(out);
  REQUIRE(before.count({1, 2}) == 1);
  REQUIRE(after.count({1, 2}) == 1);
  CHECK(after.at({1, 2}) == before.at({1, 2}));
  CHECK(count(mask_of(out, 1)) > count(mask_of(lb, 1)));
}

TEST_CASE("refinement preserves labels and forced boundaries on random scenes") {
  std::mt19937 rng(13);
  std::normal_distribution<double> noise(0.0, 10.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    GrayMap img(90, 90, 200.0, {0.0, 255.0});
    LabelMap lb(90, 90);
    std::vector<std::pair<double, double>> centres;
    for (int k = 0; k < 5; ++k) centres.push_back({15 + 60 * u(rng), 15 + 60 * u(rng)});
    for (int y = 0; y < 90; ++y)
      for (int x = 0; x < 90; ++x) {
        int best = -1;
        double bd = 1e9;
        for (int k = 0; k < 5; ++k) {
          const double d = std::hypot(x - centres[k].first, y - centres[k].second);
          if (d < bd) {
            bd = d;
            best = k;
          }
        }
        if (bd <= 13.0) {
          img(x, y) = 80.0;
          if (bd <= 11.0) lb(x, y) = best + 1;
        }
        img(x, y) = std::clamp(img(x, y) + noise(rng), 0.0, 255.0);
      }
    const LabelMap cleaned = postprocess_labels(lb, 70);
    const LabelMap out = chan_vese_refine(cleaned, img);
    CHECK(labels_of(out) == labels_of(cleaned));
    const auto before = edges(cleaned);
    for (const auto& [pair, px] : edges(out)) {
      REQUIRE(before.count(pair) == 1);
      CHECK(px == before.at(pair));
    }
  }
}

TEST_CASE("filter features") {
  LabelMap lb(40, 40);
  const BinaryMask d = oracle::disc(40, 40, 20, 20, 10);
  for (std::size_t i = 0; i < d.size(); ++i) lb[i] = d[i];
  const GrayMap i1(40, 40, 90.0, {0.0, 255.0});
  const GrayMap gm(40, 40, 0.2, {0.0, 1.0});
  const FeatureMaps maps{&lb, &i1, &gm, nullptr};
  std::vector<Point> px;
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x)
      if (d(x, y)) px.push_back({x, y});
  const auto f = fp_features(region_stats(px, 1), maps);
  CHECK(f.size() == 28u);
  CHECK(filter_feature_names().size() == 28u);
  // 1a-6a, then the intensity block starting at 10a.
  CHECK(f[6] == 90.0);
  CHECK(f[7] == 90.0);
  CHECK(f[9] == 0.0);
  CHECK(f[10] == 0.0);
  for (int i = 11; i <= 16; ++i) CHECK(f[static_cast<std::size_t>(i)] == 90.0);
  CHECK(fp_features(region_stats(px, 1), maps) == f);
}

TEST_CASE("fp_filter with constant classifiers") {
  std::mt19937 rng(3);
  const DebrisTile t = debris_tile(rng);
  const FeatureMaps maps{&t.lb, &t.i1, &t.gm, nullptr};
  CHECK(fp_filter(t.lb, constant_filter(1.0), maps) == t.lb);
  CHECK(labels_of(fp_filter(t.lb, constant_filter(0.0), maps)).empty());
  ForestModel wrong = constant_filter(1.0);
  wrong.n_features = kMergeFeatures;
  CHECK_THROWS_AS(fp_filter(t.lb, wrong, maps), Error);
}

TEST_CASE("trained filter removes debris and keeps cells") {
  std::mt19937 rng(19);
  TrainingSet train;
  for (int k = 0; k < 6; ++k) {
    const DebrisTile t = debris_tile(rng);
    const TrainingSet part = fp_training_set(t.lb, t.gt, {&t.lb, &t.i1, &t.gm, nullptr});
    train.feature_names = part.feature_names;
    for (std::size_t i = 0; i < part.rows.size(); ++i) train.add(part.rows[i], part.labels[i]);
  }
  ForestParams p;
  p.n_trees = 50;
  p.seed = 5;
  const ForestModel model = train_forest(train, p, "filter");

  int debris = 0;
  int debris_removed = 0;
  int cells = 0;
  int cells_kept = 0;
  for (int k = 0; k < 4; ++k) {
    const DebrisTile t = debris_tile(rng);
    const FeatureMaps maps{&t.lb, &t.i1, &t.gm, nullptr};
    // Compare on the uncompacted ids by checking a pixel of each object.
    const LabelMap out = fp_filter(t.lb, model, maps);
    std::map<std::int32_t, Point> probe;
    for (int y = 0; y < t.lb.height(); ++y)
      for (int x = 0; x < t.lb.width(); ++x)
        if (t.lb(x, y)) probe.emplace(t.lb(x, y), Point{x, y});
    for (std::int32_t c : t.cells) {
      ++cells;
      cells_kept += out(probe[c].x, probe[c].y) != 0;
    }
    for (std::int32_t d : t.debris) {
      ++debris;
      debris_removed += out(probe[d].x, probe[d].y) == 0;
    }
  }
  REQUIRE(debris > 0);
  REQUIRE(cells > 0);
  CHECK(debris_removed >= 0.9 * debris);
  CHECK(cells_kept >= 0.95 * cells);
}

TEST_CASE("debris strands match the benchmark definition") {
  std::mt19937 rng(2);
  const DebrisTile t = debris_tile(rng);
  const GrayMap i1 = t.i1;
  for (std::int32_t d : t.debris) {
    std::vector<Point> px;
    for (int y = 0; y < t.lb.height(); ++y)
      for (int x = 0; x < t.lb.width(); ++x)
        if (t.lb(x, y) == d) px.push_back({x, y});
    const RegionStats s = region_stats(px, d);
    CHECK(s.area < 100);
    const FeatureMaps maps{&t.lb, &i1, &t.gm, nullptr};
    CHECK(fp_features(s, maps)[4] < 0.3);
  }
}
