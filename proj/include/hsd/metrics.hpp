#pragma once

// Threshold-independent evaluation: ROC/AUC and precision-recall/AP with
// tied scores grouped into a single threshold step.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsd/region.hpp"
#include "hsd/score_map.hpp"

namespace hsd {

// Scores sorted descending, grouped into runs of equal score.
struct RankedScores {
  struct Group {
    double score;
    std::size_t positives;
    std::size_t negatives;
  };
  std::vector<Group> groups;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

RankedScores rank(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct CurvePoint {
  double x;
  double y;
};

struct Curve {
  std::vector<CurvePoint> points;
  double summary = 0.0;  // AUC or AP
};

// FPR/TPR per tie group from (0,0) to (1,1); trapezoidal AUC, which equals the
// Mann-Whitney statistic with ties counted one half.
Curve roc(std::span<const double> scores, std::span<const std::uint8_t> labels);
Curve roc(const ScoreMap& scores, const GroundTruthMask& mask);

// Recall/precision per tie group, starting at (0, 1).
// AP = sum_n (R_n - R_{n-1}) P_n, no interpolation.
Curve pr(std::span<const double> scores, std::span<const std::uint8_t> labels);
Curve pr(const ScoreMap& scores, const GroundTruthMask& mask);

// TPR at each grid FPR: the last curve point whose FPR <= the grid value.
Curve log_roc_resample(const Curve& roc_curve, std::span<const double> fpr_grid);

// `count` points spaced evenly in log10 between lo and hi (both > 0).
std::vector<double> log_grid(double lo, double hi, std::size_t count);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Predicts target where score >= threshold.
Confusion confusion_at(std::span<const double> scores, std::span<const std::uint8_t> labels,
                       double threshold);
Confusion confusion_at(const ScoreMap& scores, const GroundTruthMask& mask, double threshold);

// CSV with a header line then `x,y` rows.
std::string curve_csv(const Curve& curve, const std::string& x_name, const std::string& y_name);

// Polyline SVG of one or more curves; log_x draws the x axis in log10.
struct SvgSeries {
  std::string label;
  const Curve* curve;
};
std::string curve_svg(const std::vector<SvgSeries>& series, const std::string& x_label,
                      const std::string& y_label, bool log_x = false);

}  // namespace hsd
