#pragma once

#include "mrnom/forest.hpp"
#include "mrnom/region.hpp"

namespace mrnom {

/// Per label: fill holes (background pixels only), opening by reconstruction,
/// keep the largest 8-connected piece, drop labels under `min_area`, compact.
LabelMap postprocess_labels(const LabelMap& lb, int min_area = 70);

struct ChanVeseParams {
  int iterations = 20;
  double length_weight = 0.2;
  double lambda1 = 1.0;  // inside fit
  double lambda2 = 1.0;  // outside fit
  double step = 0.5;
  double epsilon = 1.0;  // regularised delta width
  int window_margin = 10;
  double intensity_scale = 0.012;  // I1 units to level-set units

  void validate() const;
};

/// Two-phase evolution of one mask over `img` with `phi` initialised as its signed distance.
/// Returns the zero superlevel set.
BinaryMask chan_vese(const GrayMap& img, const BinaryMask& init, const ChanVeseParams& p);

/// Signed distance (positive inside), half-pixel offset so the boundary sits at 0.
GrayMap signed_distance(const BinaryMask& mask);

/// Refines each label independently in a window around it, then restores exclusivity:
/// boundaries between labels touching in `lb` are kept exactly, contested pixels go
/// to their original owner, unclaimed pixels become background.
LabelMap chan_vese_refine(const LabelMap& lb, const GrayMap& i1, const ChanVeseParams& p = {});

LabelMap fp_filter(const LabelMap& lb, const ForestModel& model, const FeatureMaps& maps);

/// Feature rows for every label with class 1 iff its best IoU against `gt` is at least `iou_positive`.
TrainingSet fp_training_set(const LabelMap& lb, const LabelMap& gt, const FeatureMaps& maps, double iou_positive = 0.5);

}  // namespace mrnom
