#pragma once

#include <array>
#include <cstdint>

#include "mrnom/raster.hpp"

namespace mrnom {

inline constexpr int kBins = 256;

/// 256-bin histogram over a declared value range.
struct Histogram {
  std::array<std::int64_t, kBins> counts{};
  ValueRange range{0.0, 255.0};

  std::int64_t total() const;
  int nonzero_bins() const;
};

/// floor((v - lo) / (hi - lo) * 256), clamped to [0, 255].
int bin_of(double v, ValueRange r);

/// Lower edge of bin b in intensity units.
double bin_edge(int b, ValueRange r);

Histogram histogram(const GrayMap& img);
Histogram histogram(const GrayMap& img, ValueRange r);

/// A threshold is a cut between bins: "below" means bin < bin_index.
struct Threshold {
  int bin = 0;
  double value = 0.0;
};

/// Maximises between-class variance over cuts 1..255. Throws Degenerate on a single occupied bin.
int otsu_bin(const Histogram& h);
/// Zack's triangle method: bin of maximum distance below the peak-to-tail line.
int triangle_bin(const Histogram& h);

Threshold otsu_threshold(const GrayMap& img);
Threshold triangle_threshold(const GrayMap& img);

BinaryMask below(const GrayMap& img, const Threshold& t);
BinaryMask at_or_above(const GrayMap& img, const Threshold& t);

struct ClaheParams {
  int grid = 8;
  double clip_limit = 0.01;  // fraction of tile pixel count
};

/// Contrast-limited adaptive histogram equalisation on a 0-255 image.
/// Falls back to a single global tile when the image is smaller than the grid.
GrayMap clahe(const GrayMap& img, const ClaheParams& params = {});

}  // namespace mrnom
