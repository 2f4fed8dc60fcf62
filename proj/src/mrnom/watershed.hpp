#pragma once

#include "mrnom/multiscale_log.hpp"
#include "mrnom/raster.hpp"

namespace mrnom {

/// W = (1 - r_mk) + alpha1 * alpha2 * gm with alpha2 = mean(1 - r_mk) / mean(gm).
/// Both inputs must already lie in [0, 1]. A gradient-free gm drops the second term.
GrayMap build_w(const GrayMap& r_mk, const GrayMap& gm, double alpha1);

/// Maps W onto integer levels 0..65535.
GrayMap quantize16(const GrayMap& w);

/// Influence-zone boundaries between 8-connected FG components (one pixel wide,
/// on the higher-label side) plus the background pixels of the image border.
BinaryMask skiz(const BinaryMask& fg);

/// Minima imposition on a quantised map: 0 on `minima`, and regional minima nowhere else.
GrayMap impose_minima(const GrayMap& w, const BinaryMask& minima);

/// Priority flood from labelled seeds, 4-connectivity, ordered by (value, insertion sequence).
/// Seeds are inserted in raster order; neighbours are visited N, W, E, S.
LabelMap flood(const GrayMap& w, const LabelMap& seeds);

/// Flood, then zero pixels outside FG and labels listed as background, then compact.
/// Throws Internal if a regional minimum of w_imposed carries no seed.
LabelMap watershed(const GrayMap& w_imposed, const LabelMap& minima, const BinaryMask& fg, std::int32_t background_label = 0);

struct OverSegmentation {
  GrayMap w;           // quantised W before imposition
  GrayMap w_imposed;
  BinaryMask minima;   // markers and SKIZ
  LabelMap lb;
};

/// Full marker-controlled watershed step from the marker map (0-255), GM (0-1), FG and markers.
OverSegmentation over_segment(const GrayMap& r_mk, const GrayMap& gm, const BinaryMask& fg, const MarkerSet& markers,
                              double alpha1 = 0.15);

}  // namespace mrnom
