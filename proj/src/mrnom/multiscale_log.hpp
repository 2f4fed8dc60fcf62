#pragma once

#include <vector>

#include "mrnom/raster.hpp"

namespace mrnom {

/// Scales and normalisation exponent of a combined multi-scale LoG map.
struct ScaleSpaceConfig {
  std::vector<double> sigmas;
  double gamma = 1.0;

  /// sigma 5..14, gamma 1.
  static ScaleSpaceConfig foreground();
  /// sigma 2..14, gamma 2.
  static ScaleSpaceConfig marker();

  void validate() const;
};

/// sigma^gamma * (LoG_sigma * img). Dark blobs on a bright field give a positive centre response.
GrayMap scale_response(const GrayMap& img, double sigma, double gamma);

/// Pointwise sum of scale_response over cfg.sigmas, accumulated in listed order.
GrayMap combined_map(const GrayMap& img, const ScaleSpaceConfig& cfg);

struct ForegroundParams {
  ScaleSpaceConfig scales = ScaleSpaceConfig::foreground();
  int min_area = 70;
};

/// Foreground mask from the median-filtered standardised image i2, gated by EM and NS.
BinaryMask extract_foreground(const GrayMap& i2, const BinaryMask& em, const BinaryMask& ns,
                              const ForegroundParams& p = {});

/// Regional maxima of the h-maxima transform. A component is kept only if the
/// image maximum inside it exceeds the maximum on its outer boundary by >= h;
/// a component with no outer boundary is compared against the image minimum.
BinaryMask extended_hmaxima(const GrayMap& img, double h, Connectivity conn = Connectivity::Eight);

struct MarkerSet {
  int width = 0;
  int height = 0;
  std::vector<Point> points;
};

struct MarkerParams {
  ScaleSpaceConfig scales = ScaleSpaceConfig::marker();
  double h = 8.0;
  int edge_clearance = 2;  // Chebyshev distance to EM below or at which markers are dropped
};

struct MarkerDetection {
  GrayMap r_mk;  // combined marker map rescaled to 0-255
  MarkerSet markers;
};

MarkerDetection detect_markers(const GrayMap& i1, const BinaryMask& fg, const BinaryMask& em, const MarkerParams& p = {});

}  // namespace mrnom
