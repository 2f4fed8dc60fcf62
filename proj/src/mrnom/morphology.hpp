#pragma once

#include <vector>

#include "mrnom/raster.hpp"

namespace mrnom {

/// Binary reconstruction by dilation: pixels of mask connected to marker.
BinaryMask reconstruct(const BinaryMask& marker, const BinaryMask& mask, Connectivity conn = Connectivity::Eight);

/// Grayscale reconstruction by dilation. Requires marker <= mask everywhere.
GrayMap reconstruct(const GrayMap& marker, const GrayMap& mask, Connectivity conn = Connectivity::Eight);

/// Grayscale reconstruction by erosion. Requires marker >= mask everywhere.
GrayMap reconstruct_erode(const GrayMap& marker, const GrayMap& mask, Connectivity conn = Connectivity::Four);

/// 3x3 square structuring element, replicate padding.
BinaryMask dilate3(const BinaryMask& m);
BinaryMask erode3(const BinaryMask& m);
BinaryMask open3(const BinaryMask& m);
BinaryMask close3(const BinaryMask& m);

BinaryMask complement(const BinaryMask& m);

/// Background regions (4-connected) not touching the border are filled.
BinaryMask fill_holes(const BinaryMask& m);
BinaryMask remove_small(const BinaryMask& m, int min_area, Connectivity conn = Connectivity::Eight);
/// Removes centre pixels of H-shaped 3x3 configurations.
BinaryMask remove_hbreak(const BinaryMask& m);
/// One simultaneous pass removing pixels with exactly one 8-neighbour.
BinaryMask remove_spur(const BinaryMask& m);

struct CleanupOp {
  enum class Kind { FillHoles, Open, Close, RemoveSmall, RemoveHBreak, RemoveSpur };
  Kind kind;
  int min_area = 0;

  static CleanupOp fill_holes() { return {Kind::FillHoles}; }
  static CleanupOp open() { return {Kind::Open}; }
  static CleanupOp close() { return {Kind::Close}; }
  static CleanupOp remove_small(int area) { return {Kind::RemoveSmall, area}; }
  static CleanupOp remove_hbreak() { return {Kind::RemoveHBreak}; }
  static CleanupOp remove_spur() { return {Kind::RemoveSpur}; }
};

BinaryMask binary_cleanup(const BinaryMask& m, const std::vector<CleanupOp>& ops);

/// Labels 1..K in raster order of each component's first pixel.
LabelMap connected_components(const BinaryMask& m, Connectivity conn = Connectivity::Eight);

int max_label(const LabelMap& lb);

/// Renumbers nonzero labels to 1..K preserving their relative order.
LabelMap compact_labels(const LabelMap& lb);

BinaryMask regional_minima(const GrayMap& img, Connectivity conn);
BinaryMask regional_maxima(const GrayMap& img, Connectivity conn);

/// For every pixel: the label of the nearest nonzero pixel of `sites` (Euclidean),
/// ties resolved towards the lower label, plus the squared distance.
struct NearestLabel {
  LabelMap label;
  Raster<std::int64_t> dist2;
};
NearestLabel nearest_label_transform(const LabelMap& sites);

/// Number of pixels set.
std::size_t count(const BinaryMask& m);

}  // namespace mrnom
