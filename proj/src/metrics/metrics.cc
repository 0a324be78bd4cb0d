#include "uenl/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "uenl/errors.h"

namespace uenl {
namespace {

void CheckScores(std::span<const double> scores, const char* what) {
  if (scores.empty()) throw Error(std::string(what) + " scores are empty");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw Error(std::string(what) + " score " + std::to_string(i) +
                  " is not finite");
    }
  }
}

std::vector<double> SortedCopy(std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double Auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  CheckScores(id_scores, "ID");
  CheckScores(ood_scores, "OOD");
  const std::vector<double> id = SortedCopy(id_scores);
  const std::vector<double> ood = SortedCopy(ood_scores);
  // Twice the Mann-Whitney U statistic, kept integral: 2 per win, 1 per tie.
  std::uint64_t twice_u = 0;
  std::size_t below = 0;
  for (std::size_t i = 0; i < id.size();) {
    std::size_t j = i;
    while (j < id.size() && id[j] == id[i]) ++j;
    const std::uint64_t group = j - i;
    while (below < ood.size() && ood[below] < id[i]) ++below;
    std::size_t equal_end = below;
    while (equal_end < ood.size() && ood[equal_end] == id[i]) ++equal_end;
    twice_u += group * (2 * below + (equal_end - below));
    i = j;
  }
  return (static_cast<double>(twice_u) * 0.5) /
         (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

double Aupr(std::span<const double> id_scores, std::span<const double> ood_scores) {
  CheckScores(id_scores, "ID");
  CheckScores(ood_scores, "OOD");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) items.push_back({s, true});
  for (double s : ood_scores) items.push_back({s, false});
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score > b.score; });
  const double n_pos = static_cast<double>(id_scores.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  double previous_recall = 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) {
      (items[j].positive ? tp : fp) += 1;
      ++j;
    }
    const double recall = static_cast<double>(tp) / n_pos;
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - previous_recall) * precision;
    previous_recall = recall;
    i = j;
  }
  return area;
}

FprResult FprAt95Tpr(std::span<const double> id_scores,
                     std::span<const double> ood_scores) {
  CheckScores(id_scores, "ID");
  CheckScores(ood_scores, "OOD");
  const std::vector<double> id = SortedCopy(id_scores);
  const std::vector<double> ood = SortedCopy(ood_scores);
  const std::size_t n = id.size();
  // count(id >= id[k]) >= n - k, so id[k] qualifies whenever
  // 20 * (n - k) >= 19 * n, i.e. k <= n / 20. Any larger threshold leaves at
  // most n - k - 1 < 0.95 n scores at or above it.
  const std::size_t k = n / 20;
  const double beta = id[k];
  const auto first_at_or_above = std::lower_bound(ood.begin(), ood.end(), beta);
  const std::size_t false_positives =
      static_cast<std::size_t>(ood.end() - first_at_or_above);
  return {static_cast<double>(false_positives) / static_cast<double>(ood.size()),
          beta};
}

MetricReport ComputeMetrics(std::span<const double> id_scores,
                            std::span<const double> ood_scores) {
  MetricReport report;
  const FprResult fpr = FprAt95Tpr(id_scores, ood_scores);
  report.fpr95 = fpr.fpr;
  report.threshold = fpr.threshold;
  report.auroc = Auroc(id_scores, ood_scores);
  report.aupr = Aupr(id_scores, ood_scores);
  report.n_id = id_scores.size();
  report.n_ood = ood_scores.size();
  return report;
}

double ErrorRate(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw Error("error rate over " + std::to_string(predicted.size()) +
                " predictions and " + std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw Error("error rate over an empty label set");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted[i] != truth[i];
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

std::vector<HistogramBin> Histogram(std::span<const double> scores,
                                    std::size_t n_bins,
                                    std::optional<std::pair<double, double>> range) {
  if (n_bins == 0) throw Error("histogram needs at least one bin");
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error("histogram over a non-finite score");
  }
  double lo = 0.0;
  double hi = 1.0;
  if (range) {
    std::tie(lo, hi) = *range;
    if (!(hi > lo)) throw Error("histogram range must have hi > lo");
  } else if (!scores.empty()) {
    const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
    lo = *mn;
    hi = *mx;
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  const double width = (hi - lo) / static_cast<double>(n_bins);
  std::vector<HistogramBin> bins(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].left = lo + width * static_cast<double>(b);
    bins[b].right = b + 1 == n_bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (double s : scores) {
    std::size_t b = 0;
    if (s >= hi) {
      b = n_bins - 1;
    } else if (s > lo) {
      b = std::min(n_bins - 1, static_cast<std::size_t>((s - lo) / width));
      // Division rounding can land one bin off; settle against the edges.
      while (b > 0 && s < bins[b].left) --b;
      while (b + 1 < n_bins && s >= bins[b + 1].left) ++b;
    }
    ++bins[b].count;
  }
  return bins;
}

}  // namespace uenl
