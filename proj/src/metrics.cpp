#include "hsd/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "hsd/error.hpp"

namespace hsd {

namespace {

void check_aligned(const ScoreMap& scores, const GroundTruthMask& mask) {
  if (!scores.region.same_extent(mask.region) || scores.scores.size() != mask.labels.size())
    fail(ErrorKind::validation, "score map and mask are not aligned (" +
                                    std::to_string(scores.region.lines) + "x" +
                                    std::to_string(scores.region.samples) + " at " +
                                    std::to_string(scores.region.line_offset) + "," +
                                    std::to_string(scores.region.sample_offset) + " vs " +
                                    std::to_string(mask.region.lines) + "x" +
                                    std::to_string(mask.region.samples) + " at " +
                                    std::to_string(mask.region.line_offset) + "," +
                                    std::to_string(mask.region.sample_offset) + ")");
}

std::string fmt(double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

RankedScores rank(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size())
    fail(ErrorKind::validation, "scores and labels differ in length");
  std::vector<std::pair<double, std::uint8_t>> pairs(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) fail(ErrorKind::numeric, "NaN score at index " + std::to_string(i));
    if (labels[i] > 1) fail(ErrorKind::validation, "label at index " + std::to_string(i) + " is not 0/1");
    pairs[i] = {scores[i], labels[i]};
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RankedScores ranked;
  for (std::size_t i = 0; i < pairs.size();) {
    RankedScores::Group g{pairs[i].first, 0, 0};
    std::size_t j = i;
    for (; j < pairs.size() && pairs[j].first == g.score; ++j) (pairs[j].second ? g.positives : g.negatives)++;
    ranked.positives += g.positives;
    ranked.negatives += g.negatives;
    ranked.groups.push_back(g);
    i = j;
  }
  return ranked;
}

Curve roc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const RankedScores ranked = rank(scores, labels);
  const std::size_t P = ranked.positives, N = ranked.negatives;
  if (P == 0) fail(ErrorKind::validation, "ROC needs at least one positive pixel");
  if (N == 0) fail(ErrorKind::validation, "ROC needs at least one negative pixel");

  Curve curve;
  curve.points.reserve(ranked.groups.size() + 1);
  curve.points.push_back({0.0, 0.0});
  // Twice the trapezoid area in count units; exact in integers.
  std::uint64_t twice_area = 0;
  std::uint64_t tp = 0, fp = 0;
  for (const auto& g : ranked.groups) {
    const std::uint64_t tp1 = tp + g.positives, fp1 = fp + g.negatives;
    twice_area += (fp1 - fp) * (tp1 + tp);
    tp = tp1;
    fp = fp1;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(N),
                            static_cast<double>(tp) / static_cast<double>(P)});
  }
  curve.summary = static_cast<double>(twice_area) / (2.0 * static_cast<double>(P) * static_cast<double>(N));
  return curve;
}

Curve roc(const ScoreMap& scores, const GroundTruthMask& mask) {
  check_aligned(scores, mask);
  return roc(scores.scores, mask.labels);
}

Curve pr(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const RankedScores ranked = rank(scores, labels);
  const std::size_t P = ranked.positives;
  if (P == 0) fail(ErrorKind::validation, "precision-recall needs at least one positive pixel");

  Curve curve;
  curve.points.reserve(ranked.groups.size() + 1);
  curve.points.push_back({0.0, 1.0});
  double ap = 0.0;
  std::size_t tp = 0, fp = 0;
  for (const auto& g : ranked.groups) {
    tp += g.positives;
    fp += g.negatives;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += static_cast<double>(g.positives) / static_cast<double>(P) * precision;
    curve.points.push_back({static_cast<double>(tp) / static_cast<double>(P), precision});
  }
  curve.summary = ap;
  return curve;
}

Curve pr(const ScoreMap& scores, const GroundTruthMask& mask) {
  check_aligned(scores, mask);
  return pr(scores.scores, mask.labels);
}

Curve log_roc_resample(const Curve& roc_curve, std::span<const double> fpr_grid) {
  if (fpr_grid.empty()) fail(ErrorKind::validation, "FPR grid is empty");
  if (roc_curve.points.empty()) fail(ErrorKind::validation, "ROC curve is empty");
  Curve out;
  out.summary = roc_curve.summary;
  out.points.reserve(fpr_grid.size());
  for (double g : fpr_grid) {
    const auto it = std::upper_bound(roc_curve.points.begin(), roc_curve.points.end(), g,
                                     [](double v, const CurvePoint& p) { return v < p.x; });
    const double tpr = it == roc_curve.points.begin() ? 0.0 : std::prev(it)->y;
    out.points.push_back({g, tpr});
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0)
    fail(ErrorKind::validation, "log grid needs 0 < lo <= hi and count > 0");
  std::vector<double> grid(count);
  const double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = count == 1 ? lo : std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  return grid;
}

Confusion confusion_at(std::span<const double> scores, std::span<const std::uint8_t> labels,
                       double threshold) {
  if (scores.size() != labels.size())
    fail(ErrorKind::validation, "scores and labels differ in length");
  if (!std::isfinite(threshold)) fail(ErrorKind::validation, "threshold must be finite");
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) (predicted ? c.tp : c.fn)++;
    else (predicted ? c.fp : c.tn)++;
  }
  return c;
}

Confusion confusion_at(const ScoreMap& scores, const GroundTruthMask& mask, double threshold) {
  check_aligned(scores, mask);
  return confusion_at(scores.scores, mask.labels, threshold);
}

std::string curve_csv(const Curve& curve, const std::string& x_name, const std::string& y_name) {
  std::string out = x_name + "," + y_name + "\n";
  for (const auto& p : curve.points) out += fmt(p.x) + "," + fmt(p.y) + "\n";
  return out;
}

std::string curve_svg(const std::vector<SvgSeries>& series, const std::string& x_label,
                      const std::string& y_label, bool log_x) {
  constexpr double W = 480, H = 360, left = 56, right = 16, top = 16, bottom = 44;
  constexpr const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

  double x_lo = 0.0, x_hi = 1.0;
  if (log_x) {
    x_lo = 1.0;
    for (const auto& s : series)
      for (const auto& p : s.curve->points)
        if (p.x > 0.0) x_lo = std::min(x_lo, p.x);
    x_lo = std::log10(x_lo);
    x_hi = 0.0;
    if (x_hi - x_lo < 1e-12) x_lo = x_hi - 1.0;
  }
  auto px = [&](double x) {
    const double v = log_x ? std::log10(std::max(x, std::pow(10.0, x_lo))) : x;
    return left + (v - x_lo) / (x_hi - x_lo) * (W - left - right);
  };
  auto py = [&](double y) { return top + (1.0 - y) * (H - top - bottom); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right
      << "\" height=\"" << H - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 8
      << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << (log_x ? " (log10)" : "")
      << "</text>\n";
  out << "<text x=\"14\" y=\"" << (top + H - bottom) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
      << "transform=\"rotate(-90 14 " << (top + H - bottom) / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = colors[i % std::size(colors)];
    out << "<path fill=\"none\" stroke=\"" << color << "\" d=\"";
    bool first = true;
    for (const auto& p : s.curve->points) {
      if (log_x && p.x <= 0.0) continue;
      out << (first ? "M" : " L") << fmt(px(p.x)) << "," << fmt(py(p.y));
      first = false;
    }
    out << "\"/>\n";
    out << "<text x=\"" << W - right - 8 << "\" y=\"" << H - bottom - 10 - 14.0 * static_cast<double>(series.size() - 1 - i)
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << s.label << " ("
        << fmt(std::round(s.curve->summary * 1000.0) / 1000.0) << ")</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace hsd
