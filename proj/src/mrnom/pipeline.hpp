#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mrnom/config.hpp"
#include "mrnom/merge.hpp"
#include "mrnom/watershed.hpp"

namespace mrnom {

/// Everything up to the over-segmented label map.
struct TileAnalysis {
  PreprocessOutput pre;
  GrayMap i2;
  BinaryMask fg;
  MarkerDetection mk;
  OverSegmentation ws;

  FeatureMaps maps() const { return {nullptr, &pre.i1, &pre.gm, &pre.em}; }
};

TileAnalysis analyse_tile(const Image8& tile, const PipelineConfig& cfg);

using StageTimings = std::vector<std::pair<std::string, double>>;  // seconds

struct Segmentation {
  TileAnalysis analysis;
  LabelMap merged;
  LabelMap refined;
  LabelMap labels;  // final
  StageTimings timings;
};

Segmentation segment_tile(const Image8& tile, const PipelineConfig& cfg, const ForestModel& merge_model,
                          const ForestModel& filter_model);

/// Post-processing and Chan-Vese refinement of a merged label map.
LabelMap refine_labels(const LabelMap& merged, const TileAnalysis& a, const PipelineConfig& cfg);

struct AnnotatedTile {
  Image8 image;
  LabelMap gt;
};

struct TrainedModels {
  ForestModel merge;
  ForestModel filter;
  TrainingSet merge_set;
  TrainingSet filter_set;
};

/// Builds the merge set up to the watershed step, trains the merge forest, runs the
/// trained merge and refinement on the same tiles, then trains the filter forest.
/// Throws Degenerate when either set holds a single class.
TrainedModels train_models(const std::vector<AnnotatedTile>& tiles, const PipelineConfig& cfg);

/// Refuses models whose kind or feature schema does not match what the pipeline extracts.
void check_model(const ForestModel& m, const std::string& kind);

}  // namespace mrnom
