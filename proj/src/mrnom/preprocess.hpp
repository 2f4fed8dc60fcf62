#pragma once

#include "mrnom/histogram.hpp"
#include "mrnom/raster.hpp"

namespace mrnom {

struct PreprocessParams {
  double smooth_sd = 1.0;
  ClaheParams clahe{};
  double neuropil_target = 205.0;   // I_r
  double mode_fraction = 0.61;
  int histogram_smoothing = 5;      // moving-average width before the mode search
  double dog_sd = 2.0;
  int dog_side = 8;
  int edge_min_area = 50;
};

struct PreprocessOutput {
  GrayMap i0;
  GrayMap i1;
  GrayMap gm;  // 0-1
  BinaryMask em;
  BinaryMask ns;
  double neuropil_mean_estimate = 0.0;
  double correction_factor = 1.0;
};

/// Luma (0.299/0.587/0.114), Gaussian smoothing, then CLAHE. Output range 0-255.
GrayMap to_gray_smooth_equalize(const Image8& tile, const PreprocessParams& p = {});

/// Mean of the two grey levels where the smoothed histogram falls to
/// mode_fraction of the mode height on either side of the mode.
double estimate_neuropil_mean(const GrayMap& i0, const PreprocessParams& p = {});

/// i0 * target / i_n, clamped to 0-255.
GrayMap standardize(const GrayMap& i0, double i_n, double target = 205.0);

struct GradientMaps {
  GrayMap gm;
  BinaryMask em;
};
GradientMaps gradient_and_edge_maps(const GrayMap& i1, const PreprocessParams& p = {});

/// Pixels darker than the Otsu threshold of i1.
BinaryMask nissl_substance_map(const GrayMap& i1);

/// Full pre-processing. A tile whose standardised image has a single occupied
/// histogram bin yields an empty NS map instead of throwing.
PreprocessOutput preprocess(const Image8& tile, const PreprocessParams& p = {});

GrayMap luma(const Image8& tile);

}  // namespace mrnom
