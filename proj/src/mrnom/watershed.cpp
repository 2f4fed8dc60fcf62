#include "mrnom/watershed.hpp"

#include <cstdint>
#include <queue>
#include <tuple>

#include "mrnom/filters.hpp"
#include "mrnom/morphology.hpp"

namespace mrnom {

GrayMap build_w(const GrayMap& r_mk, const GrayMap& gm, double alpha1) {
  require_same_shape(r_mk, gm, "build_w: size mismatch");
  for (double v : r_mk.data()) require(v >= 0.0 && v <= 1.0, ErrorCode::Precondition, "build_w: r_mk must be in [0,1]");
  for (double v : gm.data()) require(v >= 0.0 && v <= 1.0, ErrorCode::Precondition, "build_w: gm must be in [0,1]");
  GrayMap w(r_mk.width(), r_mk.height());
  double comp_sum = 0.0;
  double gm_sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = 1.0 - r_mk[i];
    comp_sum += w[i];
    gm_sum += gm[i];
  }
  if (gm_sum > 0.0) {
    const double alpha2 = comp_sum / gm_sum;  // ratio of means over the same pixel count
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += alpha1 * alpha2 * gm[i];
  }
  if (!w.empty()) {
    const auto [mn, mx] = std::minmax_element(w.data().begin(), w.data().end());
    w.set_range({*mn, *mx});
  }
  return w;
}

GrayMap quantize16(const GrayMap& w) {
  GrayMap q = rescale(w, 0.0, 65535.0);
  for (double& v : q.data()) v = std::round(v);
  return q;
}

BinaryMask skiz(const BinaryMask& fg) {
  const int w = fg.width();
  const int h = fg.height();
  BinaryMask out(w, h);
  const LabelMap comps = connected_components(fg, Connectivity::Eight);
  if (max_label(comps) >= 2) {
    const NearestLabel zones = nearest_label_transform(comps);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (fg(x, y)) continue;
        const std::int32_t z = zones.label(x, y);
        for (int k = 0; k < 4; ++k) {
          const int nx = x + kDx[k];
          const int ny = y + kDy[k];
          if (!fg.contains(nx, ny)) continue;
          const bool split = fg(nx, ny) ? comps(nx, ny) != z : zones.label(nx, ny) < z;
          if (split) {
            out(x, y) = 1;
            break;
          }
        }
      }
  }
  for (int x = 0; x < w; ++x) {
    if (!fg(x, 0)) out(x, 0) = 1;
    if (!fg(x, h - 1)) out(x, h - 1) = 1;
  }
  for (int y = 0; y < h; ++y) {
    if (!fg(0, y)) out(0, y) = 1;
    if (!fg(w - 1, y)) out(w - 1, y) = 1;
  }
  return out;
}

GrayMap impose_minima(const GrayMap& w, const BinaryMask& minima) {
  require_same_shape(w, minima, "impose_minima: size mismatch");
  if (count(minima) == 0) fail(ErrorCode::Precondition, "no seeds");
  double top = 0.0;
  for (double v : w.data()) top = std::max(top, v);
  const double high = top + 2.0;
  GrayMap marker(w.width(), w.height(), 0.0, {0.0, high});
  GrayMap mask(w.width(), w.height(), 0.0, {0.0, high});
  for (std::size_t i = 0; i < w.size(); ++i) {
    marker[i] = minima[i] ? 0.0 : high;
    mask[i] = std::min(marker[i], w[i] + 1.0);
  }
  GrayMap out = reconstruct_erode(marker, mask, Connectivity::Four);
  out.set_range({0.0, high});
  return out;
}

LabelMap flood(const GrayMap& w, const LabelMap& seeds) {
  require_same_shape(w, seeds, "flood: size mismatch");
  LabelMap lb = seeds;
  using Item = std::tuple<double, std::uint64_t, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  std::uint64_t seq = 0;
  for (std::size_t i = 0; i < lb.size(); ++i)
    if (lb[i] > 0) heap.emplace(w[i], seq++, i);
  const auto width = static_cast<std::size_t>(w.width());
  while (!heap.empty()) {
    const auto [v, s, i] = heap.top();
    heap.pop();
    const int x = static_cast<int>(i % width);
    const int y = static_cast<int>(i / width);
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k];
      const int ny = y + kDy[k];
      if (!lb.contains(nx, ny)) continue;
      const std::size_t j = lb.index(nx, ny);
      if (lb[j] != 0) continue;
      lb[j] = lb[i];
      heap.emplace(w[j], seq++, j);
    }
  }
  return lb;
}

LabelMap watershed(const GrayMap& w_imposed, const LabelMap& minima, const BinaryMask& fg, std::int32_t background_label) {
  require_same_shape(w_imposed, minima, "watershed: size mismatch");
  require_same_shape(w_imposed, fg, "watershed: FG size mismatch");
  const BinaryMask rmin = regional_minima(w_imposed, Connectivity::Four);
  for (std::size_t i = 0; i < rmin.size(); ++i)
    if (rmin[i] && minima[i] <= 0) fail(ErrorCode::Internal, "watershed: unlabeled regional minimum");
  LabelMap lb = flood(w_imposed, minima);
  for (std::size_t i = 0; i < lb.size(); ++i)
    if (!fg[i] || (background_label > 0 && lb[i] == background_label)) lb[i] = 0;
  return compact_labels(lb);
}

OverSegmentation over_segment(const GrayMap& r_mk, const GrayMap& gm, const BinaryMask& fg, const MarkerSet& markers,
                              double alpha1) {
  require_same_shape(r_mk, fg, "over_segment: FG size mismatch");
  OverSegmentation out;
  const int w = r_mk.width();
  const int h = r_mk.height();
  out.w = quantize16(build_w(rescale(r_mk, 0.0, 1.0), rescale(gm, 0.0, 1.0), alpha1));
  out.minima = skiz(fg);
  if (count(fg) == 0) {
    out.w_imposed = out.w;
    out.lb = LabelMap(w, h);
    return out;
  }
  LabelMap seeds(w, h);
  std::int32_t next = 0;
  for (const Point& p : markers.points) {
    if (!fg.contains(p.x, p.y) || !fg(p.x, p.y)) continue;
    seeds(p.x, p.y) = ++next;
    out.minima(p.x, p.y) = 1;
  }
  const std::int32_t bg_label = next + 1;
  for (std::size_t i = 0; i < seeds.size(); ++i)
    if (out.minima[i] && seeds[i] == 0) seeds[i] = bg_label;
  out.w_imposed = impose_minima(out.w, out.minima);
  out.lb = watershed(out.w_imposed, seeds, fg, bg_label);
  return out;
}

}  // namespace mrnom
