#include "mrnom/eval.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace mrnom {

IouTable iou_matrix(const LabelMap& pred, const LabelMap& gt) {
  require_same_shape(pred, gt, "iou_matrix: dimension mismatch");
  std::map<std::int32_t, std::int64_t> area_p;
  std::map<std::int32_t, std::int64_t> area_g;
  std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> inter;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::int32_t p = pred[i];
    const std::int32_t g = gt[i];
    if (p != 0) ++area_p[p];
    if (g != 0) ++area_g[g];
    if (p != 0 && g != 0) ++inter[{p, g}];
  }
  IouTable t;
  std::map<std::int32_t, std::size_t> row;
  std::map<std::int32_t, std::size_t> col;
  for (const auto& [id, a] : area_p) {
    row[id] = t.pred_ids.size();
    t.pred_ids.push_back(id);
  }
  for (const auto& [id, a] : area_g) {
    col[id] = t.gt_ids.size();
    t.gt_ids.push_back(id);
  }
  t.iou.assign(t.pred_ids.size() * t.gt_ids.size(), 0.0);
  for (const auto& [key, n] : inter) {
    const double uni = static_cast<double>(area_p[key.first] + area_g[key.second] - n);
    t.iou[row[key.first] * t.gt_ids.size() + col[key.second]] = static_cast<double>(n) / uni;
  }
  return t;
}

double average_precision(int tp, int fp, int fn) {
  const int denom = tp + fp + fn;
  return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

MatchReport match_pairs(std::vector<MatchPair> candidates, int n_pred, int n_gt, double t) {
  require(t > 0.0 && t <= 1.0, ErrorCode::InvalidArgument, "IoU threshold must lie in (0, 1]");
  std::erase_if(candidates, [&](const MatchPair& m) { return !(m.iou >= t); });
  std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.pred != b.pred) return a.pred < b.pred;
    return a.gt < b.gt;
  });
  MatchReport r;
  r.threshold = t;
  std::vector<std::int32_t> used_p;
  std::vector<std::int32_t> used_g;
  for (const MatchPair& m : candidates) {
    if (std::find(used_p.begin(), used_p.end(), m.pred) != used_p.end()) continue;
    if (std::find(used_g.begin(), used_g.end(), m.gt) != used_g.end()) continue;
    used_p.push_back(m.pred);
    used_g.push_back(m.gt);
    r.pairs.push_back(m);
  }
  std::sort(r.pairs.begin(), r.pairs.end(), [](const MatchPair& a, const MatchPair& b) { return a.pred < b.pred; });
  r.tp = static_cast<int>(r.pairs.size());
  r.fp = n_pred - r.tp;
  r.fn = n_gt - r.tp;
  r.ap = average_precision(r.tp, r.fp, r.fn);
  return r;
}

MatchReport match_at_threshold(const IouTable& table, double t) {
  std::vector<MatchPair> c;
  for (std::size_t p = 0; p < table.pred_ids.size(); ++p)
    for (std::size_t g = 0; g < table.gt_ids.size(); ++g)
      if (table.at(p, g) > 0.0) c.push_back({table.pred_ids[p], table.gt_ids[g], table.at(p, g)});
  return match_pairs(std::move(c), static_cast<int>(table.pred_ids.size()), static_cast<int>(table.gt_ids.size()), t);
}

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int k = 50; k <= 90; k += 5) t.push_back(k / 100.0);
  return t;
}

std::vector<MatchReport> ap_curve(const LabelMap& pred, const LabelMap& gt, const std::vector<double>& thresholds) {
  require(std::is_sorted(thresholds.begin(), thresholds.end()), ErrorCode::InvalidArgument,
          "thresholds must be sorted ascending");
  const IouTable table = iou_matrix(pred, gt);
  std::vector<MatchReport> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) out.push_back(match_at_threshold(table, t));
  return out;
}

std::vector<MatchReport> pool_reports(const std::vector<std::vector<MatchReport>>& per_tile) {
  std::vector<MatchReport> pooled;
  for (const auto& tile : per_tile) {
    if (pooled.empty()) {
      for (const auto& r : tile) pooled.push_back(MatchReport{r.threshold, 0, 0, 0, 0.0, {}});
    }
    require(tile.size() == pooled.size(), ErrorCode::InvalidArgument, "pool_reports: threshold grids differ");
    for (std::size_t i = 0; i < tile.size(); ++i) {
      pooled[i].tp += tile[i].tp;
      pooled[i].fp += tile[i].fp;
      pooled[i].fn += tile[i].fn;
    }
  }
  for (auto& r : pooled) r.ap = average_precision(r.tp, r.fp, r.fn);
  return pooled;
}

std::string reports_csv(const std::vector<MatchReport>& reports) {
  std::ostringstream os;
  os << "threshold,tp,fp,fn,ap\n";
  os.setf(std::ios::fixed);
  for (const auto& r : reports) {
    os.precision(2);
    os << r.threshold << ',' << r.tp << ',' << r.fp << ',' << r.fn << ',';
    os.precision(6);
    os << r.ap << '\n';
  }
  return os.str();
}

namespace {

Rgb8 grey_canvas(const GrayMap& base) {
  Rgb8 out{base.width(), base.height(), {}};
  out.pixels.resize(base.size() * 3);
  const ValueRange r = base.range();
  const double span = r.hi > r.lo ? r.hi - r.lo : 1.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto v = static_cast<std::uint8_t>(std::clamp(std::lround((base[i] - r.lo) / span * 255.0), 0L, 255L));
    out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = v;
  }
  return out;
}

bool on_boundary(const LabelMap& lb, int x, int y) {
  const std::int32_t l = lb(x, y);
  for (int k = 0; k < 4; ++k) {
    const int nx = x + kDx[k];
    const int ny = y + kDy[k];
    if (!lb.contains(nx, ny) || lb(nx, ny) != l) return true;
  }
  return false;
}

void paint(Rgb8& img, std::size_t i, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  img.pixels[3 * i] = r;
  img.pixels[3 * i + 1] = g;
  img.pixels[3 * i + 2] = b;
}

}  // namespace

Rgb8 match_overlay(const GrayMap& base, const LabelMap& pred, const LabelMap& gt, const MatchReport& report) {
  require_same_shape(base, pred, "overlay: size mismatch");
  require_same_shape(base, gt, "overlay: size mismatch");
  Rgb8 out = grey_canvas(base);
  std::map<std::int32_t, bool> pred_hit;
  std::map<std::int32_t, bool> gt_hit;
  for (const auto& m : report.pairs) {
    pred_hit[m.pred] = true;
    gt_hit[m.gt] = true;
  }
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x)
      if (gt(x, y) != 0 && !gt_hit.count(gt(x, y)) && on_boundary(gt, x, y)) paint(out, gt.index(x, y), 255, 255, 0);
  for (int y = 0; y < pred.height(); ++y)
    for (int x = 0; x < pred.width(); ++x) {
      if (pred(x, y) == 0 || !on_boundary(pred, x, y)) continue;
      if (pred_hit.count(pred(x, y)))
        paint(out, pred.index(x, y), 0, 0, 0);
      else
        paint(out, pred.index(x, y), 255, 0, 0);
    }
  return out;
}

Rgb8 boundary_overlay(const GrayMap& base, const LabelMap& lb) {
  require_same_shape(base, lb, "overlay: size mismatch");
  Rgb8 out = grey_canvas(base);
  for (int y = 0; y < lb.height(); ++y)
    for (int x = 0; x < lb.width(); ++x)
      if (lb(x, y) != 0 && on_boundary(lb, x, y)) paint(out, lb.index(x, y), 255, 0, 0);
  return out;
}

}  // namespace mrnom
