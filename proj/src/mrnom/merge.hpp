#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mrnom/forest.hpp"
#include "mrnom/region.hpp"

namespace mrnom {

struct Adjacency {
  std::int32_t a = 0;  // a < b
  std::int32_t b = 0;
  EdgeSegment e;
};

/// Pairs of distinct nonzero labels sharing a 4-adjacent pixel pair, sorted by (a, b).
std::vector<Adjacency> build_adjacency(const LabelMap& lb);

struct Candidate {
  const RegionStats& s1;
  const RegionStats& s2;
  const RegionStats& merged;
  const EdgeSegment& e;
  const std::vector<double>& features;
};

/// Returns 1 to merge S2 into S1.
using MergeDecider = std::function<int(const Candidate&)>;

struct MergeStep {
  std::int32_t s1 = 0;
  std::int32_t s2 = 0;
  int decision = 0;
  friend bool operator==(const MergeStep&, const MergeStep&) = default;
};

struct MergeRun {
  LabelMap lb;  // compacted
  std::vector<MergeStep> trace;
  TrainingSet samples;  // features and decisions, in trace order
};

/// Two-pass candidate traversal shared by training and inference. Within each
/// 8-connected FG component and pass, S1 runs over labels in ascending order and
/// S2 over its not yet tried 4-adjacent labels, smallest first; an accepted merge
/// relabels S2 as S1 and the S2 scan continues on the grown region.
MergeRun run_merge(const LabelMap& lb, const BinaryMask& fg, const FeatureMaps& maps, const MergeDecider& decide,
                   int passes = 2);

/// Majority ground-truth instance of a pixel set: nonzero id owning at least half of the pixels, else 0.
std::int32_t majority_instance(const std::vector<Point>& pixels, const LabelMap& gt);

MergeRun build_training_set(const LabelMap& lb, const LabelMap& gt, const BinaryMask& fg, const FeatureMaps& maps,
                            int passes = 2);

MergeRun merge_loop(const LabelMap& lb, const ForestModel& model, const BinaryMask& fg, const FeatureMaps& maps,
                    int passes = 2);

}  // namespace mrnom
