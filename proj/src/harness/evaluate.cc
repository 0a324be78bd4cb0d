#include <algorithm>
#include <string>

#include "uenl/errors.h"
#include "uenl/evaluate.h"
#include "uenl/metrics.h"
#include "uenl/train.h"

namespace uenl {

std::vector<double> ComputeScores(const Checkpoint& checkpoint, const Network& net,
                                  const Tensor& x, ScoreMethod method) {
  const ExperimentConfig& c = checkpoint.config;
  switch (method) {
    case ScoreMethod::kMsp:
      return MspScores(net.Predict(checkpoint.params, x).logits);
    case ScoreMethod::kEnergy:
      return EnergyScores(net.Predict(checkpoint.params, x).logits, c.energy_temperature);
    case ScoreMethod::kOdin: {
      OdinOptions options;
      options.temperature = c.odin_temperature;
      options.epsilon = c.odin_epsilon;
      options.clamp = checkpoint.input_range;
      return OdinScores(net, checkpoint.params, x, options);
    }
    case ScoreMethod::kUncertainty:
      return UncertaintyScores(net, checkpoint.params, x);
  }
  throw ConfigError("unknown scoring method");
}

EvalReport Evaluate(const Checkpoint& checkpoint, const Dataset& id_test,
                    const std::vector<Dataset>& ood, std::span<const ScoreMethod> methods) {
  if (methods.empty()) throw ConfigError("no scoring methods requested");
  if (ood.empty()) throw DataError("evaluation needs at least one OOD set");
  if (id_test.size() == 0) throw DataError("ID test set " + id_test.name + " is empty");
  if (!id_test.labels) throw DataError("ID test set " + id_test.name + " has no labels");
  for (const Dataset& d : ood) {
    if (d.size() == 0) throw DataError("OOD set " + d.name + " is empty");
  }
  if (id_test.dim() != checkpoint.input_dim) {
    throw DataError(id_test.name + " has " + std::to_string(id_test.dim()) +
                    " features, the model expects " + std::to_string(checkpoint.input_dim));
  }
  const Network net = checkpoint.MakeNetwork();
  EvalReport report;
  report.id_name = id_test.name;

  const std::vector<int> predicted =
      PredictLabels(net.Predict(checkpoint.params, id_test.features).logits);
  const double error = ErrorRate(predicted, *id_test.labels);
  report.accuracy.push_back(
      {std::string(MethodName(checkpoint.config.method)), error, 1.0 - error});

  for (ScoreMethod method : methods) {
    ScoreSet set;
    set.method = ScoreMethodName(method);
    set.id_scores = ComputeScores(checkpoint, net, id_test.features, method);
    MetricRow mean{set.method, kMeanRowName, 0.0, 0.0, 0.0};
    for (const Dataset& d : ood) {
      if (d.dim() != checkpoint.input_dim) {
        throw DataError("OOD set " + d.name + " has " + std::to_string(d.dim()) +
                        " features, the model expects " +
                        std::to_string(checkpoint.input_dim));
      }
      std::vector<double> scores = ComputeScores(checkpoint, net, d.features, method);
      const MetricReport m = ComputeMetrics(set.id_scores, scores);
      report.metrics.push_back({set.method, d.name, m.fpr95, m.auroc, m.aupr});
      mean.fpr95 += m.fpr95;
      mean.auroc += m.auroc;
      mean.aupr += m.aupr;
      if (!set.ood_scores.emplace(d.name, std::move(scores)).second) {
        throw DataError("duplicate OOD set name " + d.name);
      }
    }
    const double n = static_cast<double>(ood.size());
    mean.fpr95 /= n;
    mean.auroc /= n;
    mean.aupr /= n;
    report.metrics.push_back(mean);
    report.scores.push_back(std::move(set));
  }
  report.histograms =
      ScoreHistograms(report.scores, report.id_name, checkpoint.config.histogram_bins);
  return report;
}

std::vector<HistogramRow> ScoreHistograms(const std::vector<ScoreSet>& sets,
                                          const std::string& id_name, std::size_t n_bins) {
  std::vector<HistogramRow> rows;
  for (const ScoreSet& set : sets) {
    std::vector<std::pair<std::string, const std::vector<double>*>> datasets = {
        {id_name, &set.id_scores}};
    for (const auto& [name, scores] : set.ood_scores) datasets.emplace_back(name, &scores);
    std::vector<double> all;
    for (const auto& [name, scores] : datasets) {
      all.insert(all.end(), scores->begin(), scores->end());
    }
    if (all.empty()) continue;
    const auto bins = Histogram(all, n_bins);
    const std::pair range{bins.front().left, bins.back().right};
    for (const auto& [name, scores] : datasets) {
      for (const HistogramBin& b : Histogram(*scores, n_bins, range)) {
        rows.push_back({name, set.method, b.left, b.right, b.count});
      }
    }
  }
  return rows;
}

}  // namespace uenl
