#pragma once

#include <cstdint>

#include "mrnom/raster.hpp"

namespace mrnom {

struct SynthSpec {
  int width = 448;
  int height = 448;
  int cells_min = 25;
  int cells_max = 35;
  double radius_min = 14.0;
  double radius_max = 26.0;
  double axis_ratio_min = 0.45;  // minor / major
  double axis_ratio_max = 1.0;
  double overlap_probability = 0.5;  // share of cells drawn inside clusters
  int cluster_min = 2;
  int cluster_max = 4;
  double cell_min = 55.0;   // darkest cell intensity
  double cell_max = 95.0;
  double cell_gradient = 25.0;  // rise from centre to rim
  double texture_sd = 6.0;
  double granule_sd = 10.0;     // smooth Nissl-like mottling inside cells
  double granule_scale = 6.0;  // smoothing SD of the mottling field
  double nucleus_contrast = 0.0;  // pale nucleus, added to the cell intensity
  double nucleus_fraction = 0.35;  // nucleus radius / minor semi-axis
  double neuropil = 205.0;
  double noise_sd = 8.0;
  int clearance = 4;  // minimum gap between separate groups
  int max_retries = 400;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthTile {
  Image8 image;  // RGB
  LabelMap gt;
};

/// Deterministic for a given spec. Throws Degenerate ("cannot place cells") when packing fails.
SynthTile synth_generate(const SynthSpec& spec);

}  // namespace mrnom
