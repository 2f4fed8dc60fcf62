#include "mrnom/multiscale_log.hpp"

#include <limits>

#include "mrnom/filters.hpp"
#include "mrnom/histogram.hpp"
#include "mrnom/morphology.hpp"

namespace mrnom {

namespace {

std::vector<double> integer_range(int lo, int hi) {
  std::vector<double> v;
  for (int s = lo; s <= hi; ++s) v.push_back(s);
  return v;
}

ValueRange data_range(const GrayMap& g) {
  if (g.empty()) return {0.0, 0.0};
  const auto [mn, mx] = std::minmax_element(g.data().begin(), g.data().end());
  return {*mn, *mx};
}

}  // namespace

ScaleSpaceConfig ScaleSpaceConfig::foreground() { return {integer_range(5, 14), 1.0}; }
ScaleSpaceConfig ScaleSpaceConfig::marker() { return {integer_range(2, 14), 2.0}; }

void ScaleSpaceConfig::validate() const {
  require(!sigmas.empty(), ErrorCode::InvalidArgument, "scale space needs at least one sigma");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    require(sigmas[i] > 0.0, ErrorCode::InvalidArgument, "sigmas must be positive");
    if (i > 0) require(sigmas[i] > sigmas[i - 1], ErrorCode::InvalidArgument, "sigmas must be strictly increasing");
  }
}

GrayMap scale_response(const GrayMap& img, double sigma, double gamma) {
  GrayMap r = log_filter(img, sigma);
  const double norm = std::pow(sigma, gamma);
  for (double& v : r.data()) v *= norm;
  r.set_range(data_range(r));
  return r;
}

GrayMap combined_map(const GrayMap& img, const ScaleSpaceConfig& cfg) {
  cfg.validate();
  GrayMap sum(img.width(), img.height(), 0.0);
  for (double s : cfg.sigmas) {
    const GrayMap r = scale_response(img, s, cfg.gamma);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += r[i];
  }
  sum.set_range(data_range(sum));
  return sum;
}

BinaryMask extract_foreground(const GrayMap& i2, const BinaryMask& em, const BinaryMask& ns, const ForegroundParams& p) {
  require_same_shape(i2, em, "extract_foreground: EM size mismatch");
  require_same_shape(i2, ns, "extract_foreground: NS size mismatch");
  const int w = i2.width();
  const int h = i2.height();

  GrayMap r = rescale(combined_map(i2, p.scales), 0.0, 255.0);
  GrayMap comp(w, h, 0.0, {0.0, 255.0});
  for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = 255.0 - i2[i];
  const double mr = mean(r);
  const double factor = mr > 0.0 ? mean(comp) / mr : 0.0;

  GrayMap s(w, h);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = r[i] * factor + comp[i];
  s.set_range(data_range(s));

  const Histogram hist = histogram(s);
  if (hist.nonzero_bins() < 2) return BinaryMask(w, h);
  const BinaryMask raw = at_or_above(s, Threshold{triangle_bin(hist), 0.0});

  const BinaryMask cleaned = binary_cleanup(raw, {CleanupOp::fill_holes(), CleanupOp::open(), CleanupOp::close(),
                                                  CleanupOp::remove_small(p.min_area), CleanupOp::remove_hbreak(),
                                                  CleanupOp::remove_spur()});

  auto gate = [&](const BinaryMask& mask, const BinaryMask& support) {
    BinaryMask seed(w, h);
    for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = (mask[i] && support[i]) ? 1 : 0;
    return reconstruct(seed, mask, Connectivity::Eight);
  };
  return gate(gate(cleaned, em), ns);
}

BinaryMask extended_hmaxima(const GrayMap& img, double h, Connectivity conn) {
  require(h > 0.0, ErrorCode::InvalidArgument, "h must be positive");
  const int w = img.width();
  const int ht = img.height();
  GrayMap lowered = img;
  for (double& v : lowered.data()) v -= h;
  const GrayMap hmax = reconstruct(lowered, img, conn);
  const BinaryMask peaks = regional_maxima(hmax, conn);
  const LabelMap cc = connected_components(peaks, conn);
  const int k = max_label(cc);

  constexpr double kLow = -std::numeric_limits<double>::infinity();
  std::vector<double> inner(static_cast<std::size_t>(k) + 1, kLow);
  std::vector<double> outer(static_cast<std::size_t>(k) + 1, kLow);
  std::vector<char> has_outer(static_cast<std::size_t>(k) + 1, 0);
  const int nb = neighbour_count(conn);
  for (int y = 0; y < ht; ++y)
    for (int x = 0; x < w; ++x) {
      const auto l = static_cast<std::size_t>(cc(x, y));
      if (l == 0) continue;
      inner[l] = std::max(inner[l], img(x, y));
      for (int d = 0; d < nb; ++d) {
        const int nx = x + kDx[d];
        const int ny = y + kDy[d];
        if (!img.contains(nx, ny) || static_cast<std::size_t>(cc(nx, ny)) == l) continue;
        outer[l] = std::max(outer[l], img(nx, ny));
        has_outer[l] = 1;
      }
    }
  const double global_min = img.empty() ? 0.0 : *std::min_element(img.data().begin(), img.data().end());
  std::vector<char> keep(static_cast<std::size_t>(k) + 1, 0);
  const double eps = 1e-9 * std::max(1.0, std::abs(h));
  for (std::size_t l = 1; l <= static_cast<std::size_t>(k); ++l) {
    const double ref = has_outer[l] ? outer[l] : global_min;
    keep[l] = inner[l] - ref >= h - eps ? 1 : 0;
  }
  BinaryMask out(w, ht);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = keep[static_cast<std::size_t>(cc[i])] && cc[i] > 0 ? 1 : 0;
  return out;
}

MarkerDetection detect_markers(const GrayMap& i1, const BinaryMask& fg, const BinaryMask& em, const MarkerParams& p) {
  require_same_shape(i1, fg, "detect_markers: FG size mismatch");
  require_same_shape(i1, em, "detect_markers: EM size mismatch");
  const int w = i1.width();
  const int h = i1.height();
  MarkerDetection out;
  out.r_mk = rescale(combined_map(i1, p.scales), 0.0, 255.0);
  out.markers.width = w;
  out.markers.height = h;

  const BinaryMask peaks = extended_hmaxima(out.r_mk, p.h, Connectivity::Eight);
  const LabelMap cc = connected_components(peaks, Connectivity::Eight);
  const int k = max_label(cc);
  std::vector<double> sx(static_cast<std::size_t>(k) + 1, 0.0);
  std::vector<double> sy(static_cast<std::size_t>(k) + 1, 0.0);
  std::vector<double> n(static_cast<std::size_t>(k) + 1, 0.0);
  std::vector<std::vector<Point>> members(static_cast<std::size_t>(k) + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto l = static_cast<std::size_t>(cc(x, y));
      if (l == 0) continue;
      sx[l] += x;
      sy[l] += y;
      n[l] += 1.0;
      members[l].push_back({x, y});
    }

  for (std::size_t l = 1; l <= static_cast<std::size_t>(k); ++l) {
    const double mx = sx[l] / n[l];
    const double my = sy[l] / n[l];
    Point c{static_cast<int>(std::lround(mx)), static_cast<int>(std::lround(my))};
    if (!cc.contains(c.x, c.y) || static_cast<std::size_t>(cc(c.x, c.y)) != l) {
      // Non-convex component: snap to its nearest pixel.
      double best = std::numeric_limits<double>::infinity();
      for (const Point& q : members[l]) {
        const double d = (q.x - mx) * (q.x - mx) + (q.y - my) * (q.y - my);
        if (d < best) {
          best = d;
          c = q;
        }
      }
    }
    if (!fg(c.x, c.y)) continue;
    bool near_edge = false;
    for (int dy = -p.edge_clearance; dy <= p.edge_clearance && !near_edge; ++dy)
      for (int dx = -p.edge_clearance; dx <= p.edge_clearance; ++dx)
        if (em.contains(c.x + dx, c.y + dy) && em(c.x + dx, c.y + dy)) {
          near_edge = true;
          break;
        }
    if (!near_edge) out.markers.points.push_back(c);
  }
  return out;
}

}  // namespace mrnom
