#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "uenl/checkpoint.h"
#include "uenl/scoring.h"

namespace uenl {

inline constexpr const char* kMeanRowName = "mean";

struct MetricRow {
  std::string method;
  std::string ood_dataset;
  double fpr95 = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
};

struct AccuracyRow {
  std::string method;
  double error_rate = 0.0;
  double acc = 0.0;
};

struct HistogramRow {
  std::string dataset;
  std::string method;
  double bin_left = 0.0;
  double bin_right = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  std::string id_name;
  // Per scoring method: one row per OOD set, then the mean row.
  std::vector<MetricRow> metrics;
  std::vector<AccuracyRow> accuracy;
  std::vector<HistogramRow> histograms;
  std::vector<ScoreSet> scores;
};

// Scores `x` (standardized) with one method, oriented higher = ID.
std::vector<double> ComputeScores(const Checkpoint& checkpoint, const Network& net,
                                  const Tensor& x, ScoreMethod method);

// Evaluates every scoring method on the ID test set against each OOD set.
// Histograms share one range per method across all datasets.
EvalReport Evaluate(const Checkpoint& checkpoint, const Dataset& id_test,
                    const std::vector<Dataset>& ood, std::span<const ScoreMethod> methods);

void WriteMetricsCsv(std::ostream& out, const std::vector<MetricRow>& rows);
void WriteAccuracyCsv(std::ostream& out, const std::vector<AccuracyRow>& rows);
void WriteHistogramCsv(std::ostream& out, const std::vector<HistogramRow>& rows);
void WriteEpochLogCsv(std::ostream& out, const std::vector<EpochLog>& log);

// Writes metrics.csv, accuracy.csv, histograms.csv and scores.csv.
void WriteReportDir(const std::filesystem::path& dir, const EvalReport& report);

// Parses a scores CSV (dataset, sample_index, method, score).
std::vector<ScoreSet> ReadScoresCsv(std::istream& in, const std::string& source,
                                    std::string& id_name);

// Histogram rows for score sets; each method's bins share one range across
// datasets.
std::vector<HistogramRow> ScoreHistograms(const std::vector<ScoreSet>& sets,
                                          const std::string& id_name, std::size_t n_bins);

}  // namespace uenl
