#include "mrnom/region.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace mrnom {

namespace {

double safe_div(double a, double b) {
  if (b == 0.0) return 0.0;
  const double r = a / b;
  return std::isfinite(r) ? r : 0.0;
}

/// Region membership over the bounding box plus a one-pixel margin.
class LocalMask {
 public:
  LocalMask(const BBox& b) : x0_(b.x - 1), y0_(b.y - 1), m_(b.w + 2, b.h + 2) {}
  void set(const Point& p, std::uint8_t v) { m_(p.x - x0_, p.y - y0_) = v; }
  std::uint8_t get(int x, int y) const {
    const int lx = x - x0_;
    const int ly = y - y0_;
    return m_.contains(lx, ly) ? m_(lx, ly) : 0;
  }

 private:
  int x0_;
  int y0_;
  Raster<std::uint8_t> m_;
};

BBox bbox_of(const std::vector<Point>& pts) {
  int x0 = pts.front().x, x1 = x0, y0 = pts.front().y, y1 = y0;
  for (const Point& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

using P2 = std::pair<std::int64_t, std::int64_t>;

std::int64_t cross(const P2& o, const P2& a, const P2& b) {
  return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
}

/// Andrew's monotone chain; counter-clockwise, no collinear points.
std::vector<P2> convex_hull(std::vector<P2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<P2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

/// Lattice points inside or on a convex polygon with integer vertices.
int lattice_count(const std::vector<P2>& hull) {
  if (hull.size() == 1) return 1;
  if (hull.size() == 2) {
    return static_cast<int>(std::gcd(std::abs(hull[1].first - hull[0].first), std::abs(hull[1].second - hull[0].second))) + 1;
  }
  std::int64_t ymin = hull[0].second, ymax = ymin;
  for (const auto& p : hull) {
    ymin = std::min(ymin, p.second);
    ymax = std::max(ymax, p.second);
  }
  int total = 0;
  for (std::int64_t y = ymin; y <= ymax; ++y) {
    double xl = std::numeric_limits<double>::infinity();
    double xr = -xl;
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const P2& a = hull[i];
      const P2& b = hull[(i + 1) % hull.size()];
      if (y < std::min(a.second, b.second) || y > std::max(a.second, b.second)) continue;
      if (a.second == b.second) {
        xl = std::min({xl, static_cast<double>(a.first), static_cast<double>(b.first)});
        xr = std::max({xr, static_cast<double>(a.first), static_cast<double>(b.first)});
      } else {
        const double x = a.first + static_cast<double>(y - a.second) * static_cast<double>(b.first - a.first) /
                                       static_cast<double>(b.second - a.second);
        xl = std::min(xl, x);
        xr = std::max(xr, x);
      }
    }
    if (xr >= xl) total += static_cast<int>(std::floor(xr + 1e-9) - std::ceil(xl - 1e-9)) + 1;
  }
  return total;
}

void feret_diameters(const std::vector<Point>& boundary, double& fmin, double& fmax) {
  // Hull of pixel corners, in half-pixel units to stay integral.
  std::vector<P2> corners;
  corners.reserve(boundary.size() * 4);
  for (const Point& p : boundary)
    for (int dy = -1; dy <= 1; dy += 2)
      for (int dx = -1; dx <= 1; dx += 2) corners.emplace_back(2 * p.x + dx, 2 * p.y + dy);
  const std::vector<P2> hull = convex_hull(corners);
  fmax = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j)
      fmax = std::max(fmax, std::hypot(static_cast<double>(hull[i].first - hull[j].first),
                                       static_cast<double>(hull[i].second - hull[j].second)));
  fmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const P2& a = hull[i];
    const P2& b = hull[(i + 1) % hull.size()];
    const double len = std::hypot(static_cast<double>(b.first - a.first), static_cast<double>(b.second - a.second));
    if (len == 0.0) continue;
    double width = 0.0;
    for (const P2& c : hull) width = std::max(width, std::abs(static_cast<double>(cross(a, b, c))) / len);
    fmin = std::min(fmin, width);
  }
  if (!std::isfinite(fmin)) fmin = 0.0;
  fmax *= 0.5;
  fmin *= 0.5;
}

struct Moments {
  double max = 0.0, min = 0.0, mean = 0.0, sd = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  m.max = *std::max_element(v.begin(), v.end());
  m.min = *std::min_element(v.begin(), v.end());
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

std::vector<double> sample(const GrayMap& g, const std::vector<Point>& pts) {
  std::vector<double> v;
  v.reserve(pts.size());
  for (const Point& p : pts) v.push_back(g(p.x, p.y));
  return v;
}

bool is_background(const LabelMap& lb, int x, int y) { return !lb.contains(x, y) || lb(x, y) == 0; }

/// 1a-7a and 10a-25a; entries 7 and 8 (edge ratios) are filled by the caller.
std::array<double, kSingleFeatures> base_features(const RegionStats& s, const FeatureMaps& maps) {
  std::array<double, kSingleFeatures> f{};
  f[0] = s.area;
  f[1] = safe_div(s.area, s.convex_area);
  f[2] = safe_div(s.area, static_cast<double>(s.bbox.w) * s.bbox.h);
  f[3] = s.eccentricity;
  f[4] = safe_div(4.0 * std::numbers::pi * s.area, s.perimeter_length * s.perimeter_length);
  f[5] = safe_div(s.minor_axis, s.major_axis);
  if (maps.lb) {
    int touching = 0;
    for (const Point& p : s.boundary) {
      for (int k = 0; k < 4; ++k)
        if (is_background(*maps.lb, p.x + kDx[k], p.y + kDy[k])) {
          ++touching;
          break;
        }
    }
    f[6] = safe_div(touching, s.perimeter_px);
  }
  std::vector<double> iv = sample(*maps.i1, s.pixels);
  const Moments mi = moments(iv);
  f[9] = mi.max;
  f[10] = mi.min;
  f[11] = mi.mean;
  f[12] = mi.sd;
  f[13] = safe_div(mi.sd, mi.mean);
  std::sort(iv.begin(), iv.end());
  const double pcts[6] = {1, 3, 5, 10, 50, 75};
  for (int i = 0; i < 6; ++i) f[static_cast<std::size_t>(14 + i)] = percentile_sorted(iv, pcts[i]);
  const Moments mg = moments(sample(*maps.gm, s.pixels));
  f[20] = mg.max;
  f[21] = mg.min;
  f[22] = mg.mean;
  f[23] = mg.sd;
  f[24] = safe_div(mg.sd, mg.mean);
  return f;
}

/// 1b-6b.
std::array<double, 6> shape_features(const RegionStats& s) {
  std::array<double, 6> f{};
  f[0] = safe_div(s.feret_min, s.feret_max);
  std::vector<double> d;
  d.reserve(s.boundary.size());
  for (const Point& p : s.boundary) d.push_back(std::hypot(p.x - s.cx, p.y - s.cy));
  const Moments m = moments(d);
  f[1] = m.max;
  f[2] = m.min;
  f[3] = m.mean;
  f[4] = m.sd;
  f[5] = safe_div(m.sd, m.mean);
  return f;
}

}  // namespace

double percentile_sorted(const std::vector<double>& sorted, double pct) {
  if (sorted.empty()) return 0.0;
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * pct / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double orientation_disparity(double theta1, double theta2) {
  double d = std::fmod(std::abs(theta1 - theta2), std::numbers::pi);
  if (d > std::numbers::pi / 2) d = std::numbers::pi - d;
  return d / (std::numbers::pi / 2);
}

RegionStats region_stats(std::vector<Point> pixels, std::int32_t label) {
  require(!pixels.empty(), ErrorCode::InvalidArgument, "region_stats: empty region");
  RegionStats s;
  s.label = label;
  s.pixels = std::move(pixels);
  s.area = static_cast<int>(s.pixels.size());
  s.bbox = bbox_of(s.pixels);

  LocalMask in(s.bbox);
  for (const Point& p : s.pixels) in.set(p, 1);

  double sx = 0.0, sy = 0.0;
  for (const Point& p : s.pixels) {
    sx += p.x;
    sy += p.y;
  }
  s.cx = sx / s.area;
  s.cy = sy / s.area;
  double m20 = 0.0, m02 = 0.0, m11 = 0.0;
  for (const Point& p : s.pixels) {
    const double dx = p.x - s.cx;
    const double dy = p.y - s.cy;
    m20 += dx * dx;
    m02 += dy * dy;
    m11 += dx * dy;
  }
  // 1/12: second moment of a unit pixel about its own centre.
  s.mu20 = m20 / s.area + 1.0 / 12.0;
  s.mu02 = m02 / s.area + 1.0 / 12.0;
  s.mu11 = m11 / s.area;
  const double half_trace = 0.5 * (s.mu20 + s.mu02);
  const double disc = std::sqrt(0.25 * (s.mu20 - s.mu02) * (s.mu20 - s.mu02) + s.mu11 * s.mu11);
  const double l1 = half_trace + disc;
  const double l2 = std::max(half_trace - disc, 0.0);
  s.major_axis = 4.0 * std::sqrt(l1);
  s.minor_axis = 4.0 * std::sqrt(l2);
  s.eccentricity = l1 > 0.0 ? std::sqrt(std::max(0.0, 1.0 - l2 / l1)) : 0.0;
  s.orientation = 0.5 * std::atan2(2.0 * s.mu11, s.mu20 - s.mu02);

  int crossings_axis = 0;
  int crossings_diag = 0;
  for (const Point& p : s.pixels) {
    bool on_boundary = false;
    for (int k = 0; k < 4; ++k)
      if (!in.get(p.x + kDx[k], p.y + kDy[k])) {
        on_boundary = true;
        ++crossings_axis;
      }
    for (int k = 4; k < 8; ++k)
      if (!in.get(p.x + kDx[k], p.y + kDy[k])) ++crossings_diag;
    if (on_boundary) s.boundary.push_back(p);
  }
  s.perimeter_px = static_cast<int>(s.boundary.size());
  // Cauchy-Crofton over 0, 45, 90 and 135 degrees; diagonal line spacing is 1/sqrt(2).
  s.perimeter_length = std::numbers::pi / 4.0 * (0.5 * crossings_axis + 0.5 * crossings_diag / std::numbers::sqrt2);

  std::vector<P2> centres;
  centres.reserve(s.boundary.size());
  for (const Point& p : s.boundary) centres.emplace_back(p.x, p.y);
  s.convex_area = std::max(lattice_count(convex_hull(std::move(centres))), s.area);
  feret_diameters(s.boundary, s.feret_min, s.feret_max);
  return s;
}

EdgeSegment edge_segment(const RegionStats& s1, const RegionStats& s2) {
  const BBox a = s1.bbox;
  const BBox b = s2.bbox;
  const int x0 = std::min(a.x, b.x);
  const int y0 = std::min(a.y, b.y);
  const int x1 = std::max(a.x + a.w, b.x + b.w);
  const int y1 = std::max(a.y + a.h, b.y + b.h);
  LocalMask m(BBox{x0, y0, x1 - x0, y1 - y0});
  for (const Point& p : s1.pixels) m.set(p, 1);
  for (const Point& p : s2.pixels) m.set(p, 2);
  EdgeSegment e;
  auto scan = [&](const std::vector<Point>& pts, std::uint8_t other) {
    for (const Point& p : pts)
      for (int k = 0; k < 4; ++k)
        if (m.get(p.x + kDx[k], p.y + kDy[k]) == other) {
          e.pixels.push_back(p);
          break;
        }
  };
  scan(s1.boundary, 2);
  scan(s2.boundary, 1);
  return e;
}

std::array<double, kSingleFeatures> features_single(const RegionStats& s, const EdgeSegment& e, const FeatureMaps& maps) {
  auto f = base_features(s, maps);
  f[7] = safe_div(e.length(), s.perimeter_px);
  f[8] = safe_div(e.length(), s.minor_axis);
  return f;
}

std::array<double, kMergedFeatures> features_merged(const RegionStats& s1, const RegionStats& s2, const RegionStats& merged,
                                                    const EdgeSegment& e, const FeatureMaps& maps) {
  std::array<double, kMergedFeatures> f{};
  const auto base = base_features(merged, maps);
  std::size_t k = 0;
  for (std::size_t i = 0; i < base.size(); ++i)
    if (i != 7 && i != 8) f[k++] = base[i];
  const auto shape = shape_features(merged);
  for (double v : shape) f[k++] = v;
  f[k++] = e.length();
  int on_edge_map = 0;
  double gm_e = 0.0;
  for (const Point& p : e.pixels) {
    if (maps.em && (*maps.em)(p.x, p.y)) ++on_edge_map;
    gm_e += (*maps.gm)(p.x, p.y);
  }
  f[k++] = safe_div(on_edge_map, e.length());
  f[k++] = orientation_disparity(s1.orientation, s2.orientation);
  double gm_s = 0.0;
  for (const Point& p : s1.pixels) gm_s += (*maps.gm)(p.x, p.y);
  for (const Point& p : s2.pixels) gm_s += (*maps.gm)(p.x, p.y);
  f[k++] = safe_div(safe_div(gm_e, e.length()), safe_div(gm_s, s1.area + s2.area));
  return f;
}

std::array<double, kFilterFeatures> fp_features(const RegionStats& s, const FeatureMaps& maps) {
  std::array<double, kFilterFeatures> f{};
  const auto base = base_features(s, maps);
  std::size_t k = 0;
  for (std::size_t i = 0; i <= 5; ++i) f[k++] = base[i];
  for (std::size_t i = 9; i < base.size(); ++i) f[k++] = base[i];
  for (double v : shape_features(s)) f[k++] = v;
  return f;
}

std::vector<double> merge_features(const RegionStats& s1, const RegionStats& s2, const RegionStats& merged,
                                   const EdgeSegment& e, const FeatureMaps& maps) {
  std::vector<double> v;
  v.reserve(kMergeFeatures);
  for (double x : features_single(s1, e, maps)) v.push_back(x);
  for (double x : features_single(s2, e, maps)) v.push_back(x);
  for (double x : features_merged(s1, s2, merged, e, maps)) v.push_back(x);
  return v;
}

namespace {

const char* const kSingleNames[kSingleFeatures] = {
    "area",         "solidity",      "extent",        "eccentricity",   "circularity",   "axes_ratio",   "bg_contact",
    "edge_per_perimeter", "edge_per_minor_axis", "i_max", "i_min", "i_mean", "i_sd", "i_cv", "i_p01", "i_p03", "i_p05",
    "i_p10",        "i_p50",         "i_p75",         "gm_max",         "gm_min",        "gm_mean",      "gm_sd",
    "gm_cv"};

const char* const kShapeNames[6] = {"feret_ratio", "dist_max", "dist_min", "dist_mean", "dist_sd", "dist_cv"};

}  // namespace

const std::vector<std::string>& merge_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const char* p : {"s1.", "s2."})
      for (const char* f : kSingleNames) n.push_back(std::string(p) + f);
    for (int i = 0; i < kSingleFeatures; ++i)
      if (i != 7 && i != 8) n.push_back(std::string("m.") + kSingleNames[i]);
    for (const char* f : kShapeNames) n.push_back(std::string("m.") + f);
    for (const char* f : {"m.edge_length", "m.edge_on_em", "m.orientation_disparity", "m.edge_gm_ratio"}) n.emplace_back(f);
    return n;
  }();
  return names;
}

const std::vector<std::string>& filter_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (int i = 0; i < kSingleFeatures; ++i)
      if (i != 6 && i != 7 && i != 8) n.emplace_back(kSingleNames[i]);
    for (const char* f : kShapeNames) n.emplace_back(f);
    return n;
  }();
  return names;
}

}  // namespace mrnom
