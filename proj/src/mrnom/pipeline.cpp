#include "mrnom/pipeline.hpp"

#include <chrono>

#include "mrnom/filters.hpp"
#include "mrnom/morphology.hpp"
#include "mrnom/refine.hpp"

namespace mrnom {

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(StageTimings& out) : out_(out), t0_(std::chrono::steady_clock::now()) {}
  void lap(const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    out_.emplace_back(stage, std::chrono::duration<double>(now - t0_).count());
    t0_ = now;
  }

 private:
  StageTimings& out_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace

TileAnalysis analyse_tile(const Image8& tile, const PipelineConfig& cfg) {
  TileAnalysis a;
  a.pre = preprocess(tile, cfg.pre);
  a.i2 = median3(a.pre.i1);
  a.fg = extract_foreground(a.i2, a.pre.em, a.pre.ns, cfg.fg);
  a.mk = detect_markers(a.pre.i1, a.fg, a.pre.em, cfg.mk);
  if (a.mk.markers.points.empty() && count(a.fg) > 0) {
    // Nothing to seed: the whole tile stays background.
    a.ws.lb = LabelMap(tile.width, tile.height);
    return a;
  }
  a.ws = over_segment(a.mk.r_mk, a.pre.gm, a.fg, a.mk.markers, cfg.alpha1);
  return a;
}

LabelMap refine_labels(const LabelMap& merged, const TileAnalysis& a, const PipelineConfig& cfg) {
  const LabelMap post = postprocess_labels(merged, cfg.min_object_area);
  return compact_labels(chan_vese_refine(post, a.pre.i1, cfg.cv));
}

Segmentation segment_tile(const Image8& tile, const PipelineConfig& cfg, const ForestModel& merge_model,
                          const ForestModel& filter_model) {
  check_model(merge_model, "merge");
  check_model(filter_model, "filter");
  Segmentation s;
  Stopwatch clock(s.timings);
  s.analysis = analyse_tile(tile, cfg);
  clock.lap("over_segmentation");
  const TileAnalysis& a = s.analysis;
  s.merged = merge_loop(a.ws.lb, merge_model, a.fg, a.maps(), cfg.merge_passes).lb;
  clock.lap("merge");
  s.refined = refine_labels(s.merged, a, cfg);
  clock.lap("refine");
  s.labels = fp_filter(s.refined, filter_model, a.maps());
  clock.lap("filter");
  return s;
}

TrainedModels train_models(const std::vector<AnnotatedTile>& tiles, const PipelineConfig& cfg) {
  require(!tiles.empty(), ErrorCode::InvalidArgument, "training needs at least one annotated tile");
  TrainedModels out;
  std::vector<TileAnalysis> analyses;
  analyses.reserve(tiles.size());
  out.merge_set.feature_names = merge_feature_names();
  for (const auto& t : tiles) {
    require(t.gt.width() == t.image.width && t.gt.height() == t.image.height, ErrorCode::InvalidArgument,
            "ground truth does not match its tile");
    analyses.push_back(analyse_tile(t.image, cfg));
    const TileAnalysis& a = analyses.back();
    const MergeRun run = build_training_set(a.ws.lb, t.gt, a.fg, a.maps(), cfg.merge_passes);
    for (std::size_t i = 0; i < run.samples.rows.size(); ++i)
      out.merge_set.add(run.samples.rows[i], run.samples.labels[i]);
  }
  try {
    out.merge = train_forest(out.merge_set, cfg.merge_forest, "merge");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Degenerate) fail(ErrorCode::Degenerate, std::string("merge ") + e.what());
    throw;
  }
  out.merge.config_hash = cfg.hash();

  out.filter_set.feature_names = filter_feature_names();
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const TileAnalysis& a = analyses[k];
    const LabelMap merged = merge_loop(a.ws.lb, out.merge, a.fg, a.maps(), cfg.merge_passes).lb;
    const LabelMap refined = refine_labels(merged, a, cfg);
    const TrainingSet s = fp_training_set(refined, tiles[k].gt, a.maps(), cfg.fpf_iou_positive);
    for (std::size_t i = 0; i < s.rows.size(); ++i) out.filter_set.add(s.rows[i], s.labels[i]);
  }
  try {
    out.filter = train_forest(out.filter_set, cfg.filter_forest, "filter");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Degenerate) fail(ErrorCode::Degenerate, std::string("filter ") + e.what());
    throw;
  }
  out.filter.config_hash = cfg.hash();
  return out;
}

void check_model(const ForestModel& m, const std::string& kind) {
  const auto& names = kind == "merge" ? merge_feature_names() : filter_feature_names();
  if (m.kind != kind) fail(ErrorCode::Schema, "expected a " + kind + " model, got '" + m.kind + "'");
  if (m.n_features != static_cast<int>(names.size()) || m.feature_names != names)
    fail(ErrorCode::Schema, kind + " model was trained under a different feature schema");
}

}  // namespace mrnom
