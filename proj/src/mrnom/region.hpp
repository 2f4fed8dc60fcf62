#pragma once

#include <array>
#include <string>
#include <vector>

#include "mrnom/raster.hpp"

namespace mrnom {

struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

/// Geometry of one superpixel, recomputed from its full pixel list.
struct RegionStats {
  std::int32_t label = 0;
  std::vector<Point> pixels;
  std::vector<Point> boundary;  // pixels with at least one 4-neighbour outside the region
  int area = 0;
  int perimeter_px = 0;
  double perimeter_length = 0.0;  // four-direction Crofton estimate
  double cx = 0.0;
  double cy = 0.0;
  double mu20 = 0.0;
  double mu02 = 0.0;
  double mu11 = 0.0;
  BBox bbox;
  int convex_area = 0;
  double major_axis = 0.0;
  double minor_axis = 0.0;
  double eccentricity = 0.0;
  double orientation = 0.0;  // radians, (-pi/2, pi/2]
  double feret_min = 0.0;
  double feret_max = 0.0;
};

RegionStats region_stats(std::vector<Point> pixels, std::int32_t label = 0);

/// Pixels of S1 or S2 that are 4-adjacent to the other region.
struct EdgeSegment {
  std::vector<Point> pixels;
  int length() const { return static_cast<int>(pixels.size()); }
};

EdgeSegment edge_segment(const RegionStats& s1, const RegionStats& s2);

/// Rasters the feature extractors read from.
struct FeatureMaps {
  const LabelMap* lb = nullptr;  // background = label 0 or outside the image
  const GrayMap* i1 = nullptr;
  const GrayMap* gm = nullptr;   // 0-1
  const BinaryMask* em = nullptr;
};

inline constexpr int kSingleFeatures = 25;
inline constexpr int kMergedFeatures = 33;
inline constexpr int kMergeFeatures = 2 * kSingleFeatures + kMergedFeatures;  // 83
inline constexpr int kFilterFeatures = 28;

std::array<double, kSingleFeatures> features_single(const RegionStats& s, const EdgeSegment& e, const FeatureMaps& maps);

std::array<double, kMergedFeatures> features_merged(const RegionStats& s1, const RegionStats& s2, const RegionStats& merged,
                                                    const EdgeSegment& e, const FeatureMaps& maps);

/// Single-region features 1a-6a and 10a-25a, then shape features 1b-6b.
std::array<double, kFilterFeatures> fp_features(const RegionStats& s, const FeatureMaps& maps);

/// Concatenation S1 (25), S2 (25), merged (33).
std::vector<double> merge_features(const RegionStats& s1, const RegionStats& s2, const RegionStats& merged,
                                   const EdgeSegment& e, const FeatureMaps& maps);

const std::vector<std::string>& merge_feature_names();
const std::vector<std::string>& filter_feature_names();

/// |a - b| folded into [0, pi/2], scaled to [0, 1].
double orientation_disparity(double theta1, double theta2);

/// Linear-interpolated percentile of sorted values (numpy "linear").
double percentile_sorted(const std::vector<double>& sorted, double pct);

}  // namespace mrnom
