#include "mrnom/preprocess.hpp"

#include <array>

#include "mrnom/filters.hpp"
#include "mrnom/morphology.hpp"

namespace mrnom {

GrayMap luma(const Image8& tile) {
  require(tile.channels == 1 || tile.channels == 3, ErrorCode::InvalidArgument, "tile must have 1 or 3 channels");
  require(tile.pixels.size() == static_cast<std::size_t>(tile.width) * tile.height * tile.channels, ErrorCode::InvalidArgument,
          "tile pixel buffer has wrong size");
  GrayMap g(tile.width, tile.height, 0.0, {0.0, 255.0});
  for (int y = 0; y < tile.height; ++y)
    for (int x = 0; x < tile.width; ++x) {
      if (tile.channels == 1) {
        g(x, y) = tile.at(x, y, 0);
      } else {
        g(x, y) = 0.299 * tile.at(x, y, 0) + 0.587 * tile.at(x, y, 1) + 0.114 * tile.at(x, y, 2);
      }
    }
  return g;
}

GrayMap to_gray_smooth_equalize(const Image8& tile, const PreprocessParams& p) {
  const GrayMap g = luma(tile);
  const int side = log_kernel_side(p.smooth_sd);  // smallest odd >= 6 sd + 1
  GrayMap smooth = convolve(g, gaussian_kernel(p.smooth_sd, side));
  for (double& v : smooth.data()) v = std::clamp(v, 0.0, 255.0);
  return clahe(smooth, p.clahe);
}

double estimate_neuropil_mean(const GrayMap& i0, const PreprocessParams& p) {
  const Histogram h = histogram(i0, {0.0, 255.0});
  const int half = p.histogram_smoothing / 2;
  std::array<double, kBins> s{};
  for (int b = 0; b < kBins; ++b) {
    double acc = 0.0;
    int n = 0;
    for (int k = b - half; k <= b + half; ++k) {
      if (k < 0 || k >= kBins) continue;
      acc += static_cast<double>(h.counts[static_cast<std::size_t>(k)]);
      ++n;
    }
    s[static_cast<std::size_t>(b)] = acc / n;
  }
  int mode = 0;
  for (int b = 1; b < kBins; ++b)
    if (s[static_cast<std::size_t>(b)] > s[static_cast<std::size_t>(mode)]) mode = b;
  const double level = p.mode_fraction * s[static_cast<std::size_t>(mode)];
  if (!(level > 0.0)) fail(ErrorCode::Degenerate, "mode degenerate");

  int left = -1;
  for (int b = mode - 1; b >= 0; --b)
    if (s[static_cast<std::size_t>(b)] <= level) {
      left = b;
      break;
    }
  int right = -1;
  for (int b = mode + 1; b < kBins; ++b)
    if (s[static_cast<std::size_t>(b)] <= level) {
      right = b;
      break;
    }
  if (left >= 0 && right >= 0) return 0.5 * (left + right);
  if (left >= 0) return left;
  if (right >= 0) return right;
  fail(ErrorCode::Degenerate, "mode degenerate");
}

GrayMap standardize(const GrayMap& i0, double i_n, double target) {
  require(i_n > 0.0, ErrorCode::InvalidArgument, "neuropil estimate must be positive");
  GrayMap out(i0.width(), i0.height(), 0.0, {0.0, 255.0});
  const double factor = target / i_n;
  for (std::size_t i = 0; i < i0.size(); ++i) out[i] = std::clamp(i0[i] * factor, 0.0, 255.0);
  return out;
}

GradientMaps gradient_and_edge_maps(const GrayMap& i1, const PreprocessParams& p) {
  const auto [kx, ky] = dog_kernel_pair(p.dog_sd, p.dog_side);
  const GrayMap gx = convolve(i1, kx);
  const GrayMap gy = convolve(i1, ky);
  GrayMap mag(i1.width(), i1.height(), 0.0, {0.0, 0.0});
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(gx[i], gy[i]);
  GradientMaps out{rescale(mag, 0.0, 1.0), BinaryMask(i1.width(), i1.height())};

  const Histogram h = histogram(out.gm);
  if (h.nonzero_bins() < 2) return out;
  const Threshold t{triangle_bin(h), 0.0};
  BinaryMask em = at_or_above(out.gm, t);
  for (std::size_t i = 0; i < em.size(); ++i)
    if (out.gm[i] <= 0.0) em[i] = 0;
  out.em = remove_small(em, p.edge_min_area, Connectivity::Eight);
  return out;
}

BinaryMask nissl_substance_map(const GrayMap& i1) { return below(i1, otsu_threshold(i1)); }

PreprocessOutput preprocess(const Image8& tile, const PreprocessParams& p) {
  PreprocessOutput out;
  out.i0 = to_gray_smooth_equalize(tile, p);
  out.neuropil_mean_estimate = estimate_neuropil_mean(out.i0, p);
  out.correction_factor = p.neuropil_target / out.neuropil_mean_estimate;
  out.i1 = standardize(out.i0, out.neuropil_mean_estimate, p.neuropil_target);
  auto maps = gradient_and_edge_maps(out.i1, p);
  out.gm = std::move(maps.gm);
  out.em = std::move(maps.em);
  if (histogram(out.i1).nonzero_bins() >= 2) {
    out.ns = nissl_substance_map(out.i1);
  } else {
    out.ns = BinaryMask(tile.width, tile.height);
  }
  return out;
}

}  // namespace mrnom
