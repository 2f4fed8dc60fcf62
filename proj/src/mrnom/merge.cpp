#include "mrnom/merge.hpp"

#include <map>
#include <set>
#include <unordered_map>

#include "mrnom/morphology.hpp"

namespace mrnom {

std::vector<Adjacency> build_adjacency(const LabelMap& lb) {
  std::map<std::pair<std::int32_t, std::int32_t>, std::set<std::pair<int, int>>> pairs;
  for (int y = 0; y < lb.height(); ++y)
    for (int x = 0; x < lb.width(); ++x) {
      const std::int32_t a = lb(x, y);
      if (a == 0) continue;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx[k];
        const int ny = y + kDy[k];
        if (!lb.contains(nx, ny)) continue;
        const std::int32_t b = lb(nx, ny);
        if (b == 0 || b == a) continue;
        pairs[{std::min(a, b), std::max(a, b)}].insert({y, x});
      }
    }
  std::vector<Adjacency> out;
  out.reserve(pairs.size());
  for (const auto& [key, px] : pairs) {
    Adjacency adj{key.first, key.second, {}};
    for (const auto& [y, x] : px) adj.e.pixels.push_back({x, y});
    out.push_back(std::move(adj));
  }
  return out;
}

std::int32_t majority_instance(const std::vector<Point>& pixels, const LabelMap& gt) {
  std::map<std::int32_t, std::size_t> votes;
  for (const Point& p : pixels) ++votes[gt(p.x, p.y)];
  std::int32_t best = 0;
  std::size_t best_n = 0;
  for (const auto& [id, n] : votes)
    if (n > best_n) {
      best = id;
      best_n = n;
    }
  if (best == 0 || 2 * best_n < pixels.size()) return 0;
  return best;
}

namespace {

class MergeEngine {
 public:
  MergeEngine(const LabelMap& lb, const BinaryMask& fg, const FeatureMaps& maps)
      : work_(lb), maps_(maps) {
    maps_.lb = &work_;
    for (int y = 0; y < work_.height(); ++y)
      for (int x = 0; x < work_.width(); ++x)
        if (work_(x, y) != 0) pixels_[work_(x, y)].push_back({x, y});
    const LabelMap comps = connected_components(fg, Connectivity::Eight);
    for (const auto& [label, px] : pixels_) {
      const std::int32_t c = comps(px.front().x, px.front().y);
      component_of_[label] = c;
      if (c > 0) by_component_[c].push_back(label);
    }
  }

  MergeRun run(const MergeDecider& decide, int passes) {
    MergeRun out;
    out.samples.feature_names = merge_feature_names();
    for (const auto& [comp, initial] : by_component_) {
      for (int pass = 0; pass < passes; ++pass) {
        std::set<std::pair<std::int32_t, std::int32_t>> considered;
        std::vector<std::int32_t> labels;
        for (std::int32_t l : initial)
          if (pixels_.count(l)) labels.push_back(l);
        for (std::int32_t s1 : labels) {
          if (!pixels_.count(s1)) continue;
          std::set<std::int32_t> tried;
          for (;;) {
            const std::int32_t s2 = next_neighbour(s1, comp, tried, considered);
            if (s2 == 0) break;
            tried.insert(s2);
            considered.insert({std::min(s1, s2), std::max(s1, s2)});
            const RegionStats& r1 = stats(s1);
            const RegionStats& r2 = stats(s2);
            const EdgeSegment e = edge_segment(r1, r2);
            std::vector<Point> joined = r1.pixels;
            joined.insert(joined.end(), r2.pixels.begin(), r2.pixels.end());
            RegionStats merged = region_stats(std::move(joined), s1);
            std::vector<double> f = merge_features(r1, r2, merged, e, maps_);
            const int d = decide(Candidate{r1, r2, merged, e, f}) ? 1 : 0;
            out.trace.push_back({s1, s2, d});
            out.samples.add(std::move(f), d);
            if (d) {
              absorb(s1, s2, std::move(merged));
              std::erase_if(considered, [&](const auto& p) { return p.first == s1 || p.second == s1; });
            }
          }
        }
      }
    }
    out.lb = compact_labels(work_);
    return out;
  }

 private:
  const RegionStats& stats(std::int32_t l) {
    auto it = stats_.find(l);
    if (it == stats_.end()) it = stats_.emplace(l, region_stats(pixels_.at(l), l)).first;
    return it->second;
  }

  std::int32_t next_neighbour(std::int32_t s1, std::int32_t comp, const std::set<std::int32_t>& tried,
                              const std::set<std::pair<std::int32_t, std::int32_t>>& considered) const {
    std::int32_t best = 0;
    for (const Point& p : pixels_.at(s1))
      for (int k = 0; k < 4; ++k) {
        const int nx = p.x + kDx[k];
        const int ny = p.y + kDy[k];
        if (!work_.contains(nx, ny)) continue;
        const std::int32_t l = work_(nx, ny);
        if (l == 0 || l == s1 || (best != 0 && l >= best)) continue;
        if (component_of_.at(l) != comp || tried.count(l)) continue;
        if (considered.count({std::min(s1, l), std::max(s1, l)})) continue;
        best = l;
      }
    return best;
  }

  void absorb(std::int32_t s1, std::int32_t s2, RegionStats merged) {
    for (const Point& p : pixels_.at(s2)) work_(p.x, p.y) = s1;
    pixels_[s1] = merged.pixels;
    pixels_.erase(s2);
    stats_.erase(s2);
    stats_.insert_or_assign(s1, std::move(merged));
  }

  LabelMap work_;
  FeatureMaps maps_;
  std::map<std::int32_t, std::vector<Point>> pixels_;
  std::unordered_map<std::int32_t, std::int32_t> component_of_;
  std::map<std::int32_t, std::vector<std::int32_t>> by_component_;
  std::unordered_map<std::int32_t, RegionStats> stats_;
};

}  // namespace

MergeRun run_merge(const LabelMap& lb, const BinaryMask& fg, const FeatureMaps& maps, const MergeDecider& decide,
                   int passes) {
  require_same_shape(lb, fg, "merge: FG size mismatch");
  require(maps.i1 && maps.gm, ErrorCode::InvalidArgument, "merge: I1 and GM are required");
  require_same_shape(lb, *maps.i1, "merge: I1 size mismatch");
  require_same_shape(lb, *maps.gm, "merge: GM size mismatch");
  if (maps.em) require_same_shape(lb, *maps.em, "merge: EM size mismatch");
  require(passes >= 0, ErrorCode::InvalidArgument, "merge: negative pass count");
  MergeEngine engine(lb, fg, maps);
  return engine.run(decide, passes);
}

MergeRun build_training_set(const LabelMap& lb, const LabelMap& gt, const BinaryMask& fg, const FeatureMaps& maps,
                            int passes) {
  require_same_shape(lb, gt, "training set: GT size mismatch");
  return run_merge(
      lb, fg, maps,
      [&](const Candidate& c) {
        const std::int32_t g1 = majority_instance(c.s1.pixels, gt);
        return g1 != 0 && g1 == majority_instance(c.s2.pixels, gt) ? 1 : 0;
      },
      passes);
}

MergeRun merge_loop(const LabelMap& lb, const ForestModel& model, const BinaryMask& fg, const FeatureMaps& maps,
                    int passes) {
  require(model.n_features == kMergeFeatures, ErrorCode::Schema, "merge model must use 83 features");
  return run_merge(
      lb, fg, maps, [&](const Candidate& c) { return model.predict(c.features).label; }, passes);
}

}  // namespace mrnom
