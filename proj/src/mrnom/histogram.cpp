#include "mrnom/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace mrnom {

std::int64_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

int Histogram::nonzero_bins() const {
  return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](std::int64_t c) { return c > 0; }));
}

int bin_of(double v, ValueRange r) {
  const double span = r.hi - r.lo;
  if (!(span > 0.0)) return 0;
  const double b = std::floor((v - r.lo) / span * kBins);
  return static_cast<int>(std::clamp(b, 0.0, static_cast<double>(kBins - 1)));
}

double bin_edge(int b, ValueRange r) { return r.lo + b * (r.hi - r.lo) / kBins; }

Histogram histogram(const GrayMap& img) { return histogram(img, img.range()); }

Histogram histogram(const GrayMap& img, ValueRange r) {
  Histogram h;
  h.range = r;
  for (double v : img.data()) ++h.counts[static_cast<std::size_t>(bin_of(v, r))];
  return h;
}

int otsu_bin(const Histogram& h) {
  if (h.nonzero_bins() < 2) fail(ErrorCode::Degenerate, "degenerate histogram");
  long double n = 0.0L;
  long double s = 0.0L;
  for (int b = 0; b < kBins; ++b) {
    n += static_cast<long double>(h.counts[static_cast<std::size_t>(b)]);
    s += static_cast<long double>(b) * static_cast<long double>(h.counts[static_cast<std::size_t>(b)]);
  }
  long double w0 = 0.0L;
  long double s0 = 0.0L;
  long double best = -1.0L;
  int best_t = 1;
  for (int t = 1; t < kBins; ++t) {
    const auto c = static_cast<long double>(h.counts[static_cast<std::size_t>(t - 1)]);
    w0 += c;
    s0 += static_cast<long double>(t - 1) * c;
    const long double w1 = n - w0;
    if (w0 <= 0.0L || w1 <= 0.0L) continue;
    const long double d = n * s0 - w0 * s;
    const long double score = d * d / (w0 * w1);
    if (score > best) {
      best = score;
      best_t = t;
    }
  }
  return best_t;
}

int triangle_bin(const Histogram& h) {
  int first = -1;
  int last = -1;
  int peak = 0;
  for (int b = 0; b < kBins; ++b) {
    const auto c = h.counts[static_cast<std::size_t>(b)];
    if (c > 0) {
      if (first < 0) first = b;
      last = b;
    }
    if (c > h.counts[static_cast<std::size_t>(peak)]) peak = b;
  }
  if (first < 0 || first == last) fail(ErrorCode::Degenerate, "degenerate histogram");

  // Tail on the side farther from the peak, extended to the first empty bin when one exists.
  const bool right = (last - peak) >= (peak - first);
  const int end = right ? std::min(last + 1, kBins - 1) : std::max(first - 1, 0);
  const int step = right ? 1 : -1;
  const std::int64_t hp = h.counts[static_cast<std::size_t>(peak)];
  const std::int64_t he = h.counts[static_cast<std::size_t>(end)];
  const std::int64_t dx = end - peak;
  const std::int64_t dh = he - hp;

  // Signed cross product; positive below the line (towards the axis) for either tail direction.
  std::int64_t best = -1;
  int best_b = peak;
  for (int b = peak; b != end + step; b += step) {
    const std::int64_t px = b - peak;
    const std::int64_t ph = h.counts[static_cast<std::size_t>(b)] - hp;
    std::int64_t cross = dx * ph - dh * px;
    if (right) cross = -cross;
    if (cross > best) {
      best = cross;
      best_b = b;
    }
  }
  return best_b;
}

Threshold otsu_threshold(const GrayMap& img) {
  const Histogram h = histogram(img);
  const int b = otsu_bin(h);
  return {b, bin_edge(b, h.range)};
}

Threshold triangle_threshold(const GrayMap& img) {
  const Histogram h = histogram(img);
  const int b = triangle_bin(h);
  return {b, bin_edge(b, h.range)};
}

BinaryMask below(const GrayMap& img, const Threshold& t) {
  BinaryMask m(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) m[i] = bin_of(img[i], img.range()) < t.bin ? 1 : 0;
  return m;
}

BinaryMask at_or_above(const GrayMap& img, const Threshold& t) {
  BinaryMask m(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) m[i] = bin_of(img[i], img.range()) >= t.bin ? 1 : 0;
  return m;
}

namespace {

using Lut = std::array<double, kBins>;

Lut tile_lut(const GrayMap& img, int x0, int x1, int y0, int y1, double clip_limit) {
  std::array<double, kBins> hist{};
  const ValueRange r{0.0, 255.0};
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) hist[static_cast<std::size_t>(bin_of(img(x, y), r))] += 1.0;
  const double n = static_cast<double>(x1 - x0) * (y1 - y0);
  const double clip = std::max(clip_limit * n, n / kBins);
  double excess = 0.0;
  for (double& c : hist)
    if (c > clip) {
      excess += c - clip;
      c = clip;
    }
  const double add = excess / kBins;
  for (double& c : hist) c += add;

  Lut lut{};
  double cdf = 0.0;
  double cdf_min = -1.0;
  std::array<double, kBins> cum{};
  for (int b = 0; b < kBins; ++b) {
    cdf += hist[static_cast<std::size_t>(b)];
    cum[static_cast<std::size_t>(b)] = cdf;
    if (cdf_min < 0.0 && hist[static_cast<std::size_t>(b)] > 0.0) cdf_min = cdf;
  }
  const double denom = n - cdf_min;
  for (int b = 0; b < kBins; ++b) {
    if (denom <= 1e-12) {
      lut[static_cast<std::size_t>(b)] = (b + 0.5) * 255.0 / kBins;
    } else {
      lut[static_cast<std::size_t>(b)] = std::clamp((cum[static_cast<std::size_t>(b)] - cdf_min) / denom * 255.0, 0.0, 255.0);
    }
  }
  return lut;
}

}  // namespace

GrayMap clahe(const GrayMap& img, const ClaheParams& params) {
  require(params.grid >= 1, ErrorCode::InvalidArgument, "CLAHE grid must be >= 1");
  require(params.clip_limit > 0.0, ErrorCode::InvalidArgument, "CLAHE clip limit must be positive");
  const int w = img.width();
  const int h = img.height();
  GrayMap out(w, h, 0.0, {0.0, 255.0});
  if (img.empty()) return out;

  const int grid = (w < params.grid || h < params.grid) ? 1 : params.grid;
  std::vector<int> xs(static_cast<std::size_t>(grid + 1));
  std::vector<int> ys(static_cast<std::size_t>(grid + 1));
  for (int i = 0; i <= grid; ++i) {
    xs[static_cast<std::size_t>(i)] = static_cast<int>(static_cast<long>(i) * w / grid);
    ys[static_cast<std::size_t>(i)] = static_cast<int>(static_cast<long>(i) * h / grid);
  }
  std::vector<Lut> luts(static_cast<std::size_t>(grid * grid));
  std::vector<double> cx(static_cast<std::size_t>(grid));
  std::vector<double> cy(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i) {
    cx[static_cast<std::size_t>(i)] = 0.5 * (xs[static_cast<std::size_t>(i)] + xs[static_cast<std::size_t>(i + 1)] - 1);
    cy[static_cast<std::size_t>(i)] = 0.5 * (ys[static_cast<std::size_t>(i)] + ys[static_cast<std::size_t>(i + 1)] - 1);
  }
  for (int ty = 0; ty < grid; ++ty)
    for (int tx = 0; tx < grid; ++tx)
      luts[static_cast<std::size_t>(ty * grid + tx)] =
          tile_lut(img, xs[static_cast<std::size_t>(tx)], xs[static_cast<std::size_t>(tx + 1)],
                   ys[static_cast<std::size_t>(ty)], ys[static_cast<std::size_t>(ty + 1)], params.clip_limit);

  // Locate the pair of tile centres bracketing a coordinate and the interpolation weight.
  auto bracket = [grid](const std::vector<double>& c, double p, int& i0, int& i1, double& f) {
    if (p <= c.front()) {
      i0 = i1 = 0;
      f = 0.0;
      return;
    }
    if (p >= c.back()) {
      i0 = i1 = grid - 1;
      f = 0.0;
      return;
    }
    i0 = 0;
    while (i0 + 1 < grid && c[static_cast<std::size_t>(i0 + 1)] <= p) ++i0;
    i1 = i0 + 1;
    f = (p - c[static_cast<std::size_t>(i0)]) / (c[static_cast<std::size_t>(i1)] - c[static_cast<std::size_t>(i0)]);
  };

  const ValueRange r{0.0, 255.0};
  for (int y = 0; y < h; ++y) {
    int y0 = 0, y1 = 0;
    double fy = 0.0;
    bracket(cy, y, y0, y1, fy);
    for (int x = 0; x < w; ++x) {
      int x0 = 0, x1 = 0;
      double fx = 0.0;
      bracket(cx, x, x0, x1, fx);
      const auto b = static_cast<std::size_t>(bin_of(img(x, y), r));
      const double v00 = luts[static_cast<std::size_t>(y0 * grid + x0)][b];
      const double v10 = luts[static_cast<std::size_t>(y0 * grid + x1)][b];
      const double v01 = luts[static_cast<std::size_t>(y1 * grid + x0)][b];
      const double v11 = luts[static_cast<std::size_t>(y1 * grid + x1)][b];
      const double top = v00 + fx * (v10 - v00);
      const double bot = v01 + fx * (v11 - v01);
      out(x, y) = std::clamp(top + fy * (bot - top), 0.0, 255.0);
    }
  }
  out.check_range();
  return out;
}

}  // namespace mrnom
