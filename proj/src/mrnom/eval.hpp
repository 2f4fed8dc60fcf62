#pragma once

#include <string>
#include <vector>

#include "mrnom/raster.hpp"

namespace mrnom {

/// IoU between every predicted and every ground-truth instance (label 0 ignored).
struct IouTable {
  std::vector<std::int32_t> pred_ids;  // ascending
  std::vector<std::int32_t> gt_ids;    // ascending
  std::vector<double> iou;             // row-major, pred x gt

  double at(std::size_t p, std::size_t g) const { return iou[p * gt_ids.size() + g]; }
};

IouTable iou_matrix(const LabelMap& pred, const LabelMap& gt);

struct MatchPair {
  std::int32_t pred = 0;
  std::int32_t gt = 0;
  double iou = 0.0;
  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchReport {
  double threshold = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double ap = 0.0;
  std::vector<MatchPair> pairs;
  friend bool operator==(const MatchReport&, const MatchReport&) = default;
};

/// TP / (TP + FP + FN); 1 when there is nothing to find and nothing was predicted.
double average_precision(int tp, int fp, int fn);

/// Greedy one-to-one matching over pairs with IoU >= t, highest IoU first;
/// ties go to the smaller (pred, gt) ids.
MatchReport match_at_threshold(const IouTable& table, double t);

/// Same, over an explicit candidate list in any order.
MatchReport match_pairs(std::vector<MatchPair> candidates, int n_pred, int n_gt, double t);

std::vector<double> default_thresholds();

std::vector<MatchReport> ap_curve(const LabelMap& pred, const LabelMap& gt, const std::vector<double>& thresholds);

/// Sums TP/FP/FN per threshold across tiles; pairs are dropped.
std::vector<MatchReport> pool_reports(const std::vector<std::vector<MatchReport>>& per_tile);

/// "threshold,tp,fp,fn,ap" rows.
std::string reports_csv(const std::vector<MatchReport>& reports);

/// Per-pixel colours for TP (black), FP (red) and FN (yellow) instances at one threshold, over a grey copy of the tile.
struct Rgb8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB
};
Rgb8 match_overlay(const GrayMap& base, const LabelMap& pred, const LabelMap& gt, const MatchReport& report);

/// Label boundaries drawn in red over a grey copy of the tile.
Rgb8 boundary_overlay(const GrayMap& base, const LabelMap& lb);

}  // namespace mrnom
