#include "mrnom/refine.hpp"

#include <map>
#include <numbers>

#include "mrnom/eval.hpp"
#include "mrnom/morphology.hpp"

namespace mrnom {

namespace {

std::map<std::int32_t, std::vector<Point>> pixels_by_label(const LabelMap& lb) {
  std::map<std::int32_t, std::vector<Point>> out;
  for (int y = 0; y < lb.height(); ++y)
    for (int x = 0; x < lb.width(); ++x)
      if (lb(x, y) != 0) out[lb(x, y)].push_back({x, y});
  return out;
}

struct Window {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;
};

Window window_around(const std::vector<Point>& px, int margin, int width, int height) {
  int x0 = px.front().x, x1 = x0, y0 = px.front().y, y1 = y0;
  for (const Point& p : px) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  x0 = std::max(0, x0 - margin);
  y0 = std::max(0, y0 - margin);
  x1 = std::min(width - 1, x1 + margin);
  y1 = std::min(height - 1, y1 + margin);
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

BinaryMask largest_component(const BinaryMask& m) {
  const LabelMap cc = connected_components(m, Connectivity::Eight);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(max_label(cc)) + 1, 0);
  for (std::int32_t l : cc.data())
    if (l > 0) ++sizes[static_cast<std::size_t>(l)];
  std::size_t best = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l)
    if (best == 0 || sizes[l] > sizes[best]) best = l;
  BinaryMask out(m.width(), m.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = best != 0 && static_cast<std::size_t>(cc[i]) == best ? 1 : 0;
  return out;
}

}  // namespace

LabelMap postprocess_labels(const LabelMap& lb, int min_area) {
  LabelMap work = lb;
  for (const auto& [label, px] : pixels_by_label(lb)) {
    const Window win = window_around(px, 1, lb.width(), lb.height());
    BinaryMask m(win.w, win.h);
    for (const Point& p : px) m(p.x - win.x0, p.y - win.y0) = 1;
    const BinaryMask filled = fill_holes(m);
    for (int y = 0; y < win.h; ++y)
      for (int x = 0; x < win.w; ++x)
        if (filled(x, y) && !m(x, y) && work(x + win.x0, y + win.y0) == 0) m(x, y) = 1;
    const BinaryMask keep = largest_component(reconstruct(open3(m), m, Connectivity::Eight));
    for (int y = 0; y < win.h; ++y)
      for (int x = 0; x < win.w; ++x) {
        std::int32_t& v = work(x + win.x0, y + win.y0);
        if (keep(x, y))
          v = label;
        else if (v == label)
          v = 0;
      }
  }
  std::map<std::int32_t, int> area;
  for (std::int32_t v : work.data())
    if (v != 0) ++area[v];
  for (std::int32_t& v : work.data())
    if (v != 0 && area[v] < min_area) v = 0;
  return compact_labels(work);
}

void ChanVeseParams::validate() const {
  require(iterations >= 0, ErrorCode::InvalidArgument, "cv.iterations must be non-negative");
  require(length_weight > 0.0 && lambda1 > 0.0 && lambda2 > 0.0 && step > 0.0 && epsilon > 0.0,
          ErrorCode::InvalidArgument, "Chan-Vese weights must be positive");
  require(window_margin >= 0, ErrorCode::InvalidArgument, "cv.window_margin must be non-negative");
  require(intensity_scale > 0.0, ErrorCode::InvalidArgument, "cv.intensity_scale must be positive");
}

GrayMap signed_distance(const BinaryMask& mask) {
  LabelMap in_sites(mask.width(), mask.height());
  LabelMap out_sites(mask.width(), mask.height());
  bool any_in = false;
  bool any_out = false;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      in_sites[i] = 1;
      any_in = true;
    } else {
      out_sites[i] = 1;
      any_out = true;
    }
  }
  const double far = static_cast<double>(mask.width() + mask.height());
  GrayMap phi(mask.width(), mask.height(), 0.0, {-far, far});
  const NearestLabel to_in = nearest_label_transform(in_sites);
  const NearestLabel to_out = nearest_label_transform(out_sites);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i])
      phi[i] = any_out ? std::sqrt(static_cast<double>(to_out.dist2[i])) - 0.5 : far;
    else
      phi[i] = any_in ? -(std::sqrt(static_cast<double>(to_in.dist2[i])) - 0.5) : -far;
  }
  return phi;
}

BinaryMask chan_vese(const GrayMap& img, const BinaryMask& init, const ChanVeseParams& p) {
  require_same_shape(img, init, "chan_vese: size mismatch");
  p.validate();
  const int w = img.width();
  const int h = img.height();
  GrayMap phi = signed_distance(init);
  std::vector<double> f(img.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = img[i] * p.intensity_scale;
  constexpr double kEta = 1e-16;
  auto at = [&](int x, int y) { return phi.clamped(x, y); };
  double c1 = 0.0;
  double c2 = 0.0;
  for (int it = 0; it < p.iterations; ++it) {
    double s1 = 0.0, s2 = 0.0, n1 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (phi[i] >= 0.0) {
        s1 += f[i];
        n1 += 1.0;
      } else {
        s2 += f[i];
        n2 += 1.0;
      }
    }
    if (n1 > 0.0) c1 = s1 / n1;
    if (n2 > 0.0) c2 = s2 / n2;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double c = phi(x, y);
        const double r = at(x + 1, y);
        const double l = at(x - 1, y);
        const double d = at(x, y + 1);
        const double u = at(x, y - 1);
        const double grad_y = 0.5 * (d - u);
        const double grad_x = 0.5 * (r - l);
        const double div_r = 1.0 / std::sqrt(kEta + (r - c) * (r - c) + grad_y * grad_y);
        const double ly = 0.5 * (at(x - 1, y + 1) - at(x - 1, y - 1));
        const double div_l = 1.0 / std::sqrt(kEta + (c - l) * (c - l) + ly * ly);
        const double div_d = 1.0 / std::sqrt(kEta + grad_x * grad_x + (d - c) * (d - c));
        const double ux = 0.5 * (at(x + 1, y - 1) - at(x - 1, y - 1));
        const double div_u = 1.0 / std::sqrt(kEta + ux * ux + (c - u) * (c - u));
        const double v = f[phi.index(x, y)];
        const double delta = p.step * p.epsilon / (std::numbers::pi * (p.epsilon * p.epsilon + c * c));
        const double fit = -p.lambda1 * (v - c1) * (v - c1) + p.lambda2 * (v - c2) * (v - c2);
        const double num = c + delta * (p.length_weight * (r * div_r + l * div_l + d * div_d + u * div_u) + fit);
        phi(x, y) = num / (1.0 + delta * p.length_weight * (div_r + div_l + div_d + div_u));
      }
  }
  BinaryMask out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = phi[i] >= 0.0 ? 1 : 0;
  return out;
}

LabelMap chan_vese_refine(const LabelMap& lb, const GrayMap& i1, const ChanVeseParams& p) {
  require_same_shape(lb, i1, "chan_vese_refine: size mismatch");
  p.validate();
  const int w = lb.width();
  const int h = lb.height();
  LabelMap claimant(w, h);
  Raster<std::uint8_t> claims(w, h);
  std::map<std::int32_t, BinaryMask> evolved;
  std::map<std::int32_t, Window> windows;
  for (const auto& [label, px] : pixels_by_label(lb)) {
    const Window win = window_around(px, p.window_margin, w, h);
    GrayMap sub(win.w, win.h, 0.0, i1.range());
    BinaryMask init(win.w, win.h);
    for (int y = 0; y < win.h; ++y)
      for (int x = 0; x < win.w; ++x) sub(x, y) = i1(x + win.x0, y + win.y0);
    for (const Point& q : px) init(q.x - win.x0, q.y - win.y0) = 1;
    BinaryMask m = chan_vese(sub, init, p);
    if (count(m) == 0) m = init;
    for (int y = 0; y < win.h; ++y)
      for (int x = 0; x < win.w; ++x) {
        if (!m(x, y)) continue;
        const int gx = x + win.x0;
        const int gy = y + win.y0;
        if (claims(gx, gy) < 255) ++claims(gx, gy);
        claimant(gx, gy) = label;
      }
    evolved.emplace(label, std::move(m));
    windows.emplace(label, win);
  }

  auto claimed_by = [&](std::int32_t label, int x, int y) {
    const Window& win = windows.at(label);
    const int lx = x - win.x0;
    const int ly = y - win.y0;
    return lx >= 0 && ly >= 0 && lx < win.w && ly < win.h && evolved.at(label)(lx, ly) != 0;
  };

  LabelMap out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::int32_t own = lb(x, y);
      if (own != 0) {
        bool shared = false;
        for (int k = 0; k < 4 && !shared; ++k) {
          const int nx = x + kDx[k];
          const int ny = y + kDy[k];
          shared = lb.contains(nx, ny) && lb(nx, ny) != 0 && lb(nx, ny) != own;
        }
        out(x, y) = shared || claimed_by(own, x, y) ? own : 0;
        continue;
      }
      if (claims(x, y) != 1) continue;
      const std::int32_t a = claimant(x, y);
      bool contested = false;
      for (int k = 0; k < 4 && !contested; ++k) {
        const int nx = x + kDx[k];
        const int ny = y + kDy[k];
        if (!lb.contains(nx, ny)) continue;
        const std::int32_t o = lb(nx, ny);
        contested = (o != 0 && o != a) || (claims(nx, ny) > 0 && (claims(nx, ny) > 1 || claimant(nx, ny) != a));
      }
      if (!contested) out(x, y) = a;
    }
  return out;
}

LabelMap fp_filter(const LabelMap& lb, const ForestModel& model, const FeatureMaps& maps) {
  require(model.n_features == kFilterFeatures, ErrorCode::Schema, "filter model must use 28 features");
  FeatureMaps m = maps;
  m.lb = &lb;
  LabelMap out = lb;
  for (auto& [label, px] : pixels_by_label(lb)) {
    const RegionStats s = region_stats(std::move(px), label);
    const auto f = fp_features(s, m);
    if (model.predict(std::vector<double>(f.begin(), f.end())).label == 1) continue;
    for (const Point& q : s.pixels) out(q.x, q.y) = 0;
  }
  return compact_labels(out);
}

TrainingSet fp_training_set(const LabelMap& lb, const LabelMap& gt, const FeatureMaps& maps, double iou_positive) {
  require_same_shape(lb, gt, "fp_training_set: GT size mismatch");
  const IouTable table = iou_matrix(lb, gt);
  std::map<std::int32_t, double> best;
  for (std::size_t p = 0; p < table.pred_ids.size(); ++p)
    for (std::size_t g = 0; g < table.gt_ids.size(); ++g)
      best[table.pred_ids[p]] = std::max(best[table.pred_ids[p]], table.at(p, g));
  FeatureMaps m = maps;
  m.lb = &lb;
  TrainingSet set;
  set.feature_names = filter_feature_names();
  for (auto& [label, px] : pixels_by_label(lb)) {
    const RegionStats s = region_stats(std::move(px), label);
    const auto f = fp_features(s, m);
    set.add(std::vector<double>(f.begin(), f.end()), best[label] >= iou_positive ? 1 : 0);
  }
  return set;
}

}  // namespace mrnom
