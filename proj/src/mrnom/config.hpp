#pragma once

#include <string>
#include <vector>

#include "mrnom/forest.hpp"
#include "mrnom/multiscale_log.hpp"
#include "mrnom/preprocess.hpp"
#include "mrnom/refine.hpp"
#include "mrnom/synth.hpp"

namespace mrnom {

struct PipelineConfig {
  PreprocessParams pre;
  ForegroundParams fg;
  MarkerParams mk;
  double alpha1 = 0.15;
  int merge_passes = 2;
  ForestParams merge_forest;
  int min_object_area = 70;
  ChanVeseParams cv;
  double fpf_iou_positive = 0.5;
  ForestParams filter_forest;
  std::vector<double> thresholds;
  SynthSpec synth;
  int synth_tiles = 10;
  int workers = 1;  // not part of the hash

  PipelineConfig();

  /// Flat "key = value" text; '#' starts a comment. Unknown keys are rejected.
  static PipelineConfig parse(const std::string& text);
  void set(const std::string& key, const std::string& value);
  /// Fixes every seed from one base value.
  void set_seed(std::uint64_t seed);
  void validate() const;

  /// Every key with its current value, in a fixed order.
  std::string canonical(bool include_runtime = true) const;
  /// SHA-256 of canonical() without runtime-only keys.
  std::string hash() const;
  static std::vector<std::string> keys();
};

}  // namespace mrnom
