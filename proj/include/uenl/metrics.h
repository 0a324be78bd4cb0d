#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace uenl {

// Detection metrics treat ID as the positive class, with higher scores
// meaning more in-distribution. All functions throw uenl::Error on empty or
// non-finite input.

// Mann-Whitney AUROC: P(id > ood) + 0.5 P(id == ood).
double Auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

// Average precision with ID positive: sum over distinct thresholds t, taken
// in decreasing order, of (recall(t) - recall(prev)) * precision(t).
double Aupr(std::span<const double> id_scores, std::span<const double> ood_scores);

struct FprResult {
  double fpr = 0.0;
  // Largest threshold with fraction(id >= threshold) >= 0.95.
  double threshold = 0.0;
};

FprResult FprAt95Tpr(std::span<const double> id_scores,
                     std::span<const double> ood_scores);

struct MetricReport {
  double fpr95 = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  double threshold = 0.0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
};

MetricReport ComputeMetrics(std::span<const double> id_scores,
                            std::span<const double> ood_scores);

// Fraction of mismatched labels. Throws on length mismatch or empty input.
double ErrorRate(std::span<const int> predicted, std::span<const int> truth);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
};

// Equal-width bins, left-closed and right-open except the last, which is
// closed. Without a range the bins span [min, max] of the scores (widened
// by 0.5 on each side when all scores are equal). Scores outside an
// explicit range are counted in the nearest edge bin.
std::vector<HistogramBin> Histogram(
    std::span<const double> scores, std::size_t n_bins,
    std::optional<std::pair<double, double>> range = std::nullopt);

}  // namespace uenl
