#include "uenl/sweep.h"

#include <future>

#include "uenl/config.h"
#include "uenl/errors.h"
#include "uenl/evaluate.h"
#include "uenl/format.h"
#include "uenl/rng.h"
#include "uenl/train.h"

namespace uenl {
namespace {

using Json = nlohmann::ordered_json;

struct Cell {
  ExperimentConfig config;
  std::vector<std::pair<std::string, std::string>> settings;
};

SweepRow RunCell(const Cell& cell) {
  const ExperimentConfig& config = cell.config;
  const PreparedData data = PrepareData(config.data);
  if (data.ood.empty()) throw ConfigError("sweep needs at least one OOD set in data.ood");
  const Checkpoint ckpt = Train(config, data);
  const ScoreMethod primary = config.PrimaryScore();
  const EvalReport report = Evaluate(ckpt, data.test, data.ood, std::span(&primary, 1));
  const MetricRow& mean = report.metrics.back();
  SweepRow row;
  row.settings = cell.settings;
  row.seed = config.seed;
  row.score_method = mean.method;
  row.fpr95 = mean.fpr95;
  row.auroc = mean.auroc;
  row.aupr = mean.aupr;
  row.error_rate = report.accuracy.front().error_rate;
  row.acc = report.accuracy.front().acc;
  return row;
}

}  // namespace

SweepAxis ParseSweepAxis(std::string_view text) {
  const std::size_t eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == text.size()) {
    throw ConfigError("grid axis '" + std::string(text) + "' must look like key=v1,v2");
  }
  SweepAxis axis{std::string(text.substr(0, eq)), {}};
  std::string_view rest = text.substr(eq + 1);
  const Json whole = Json::parse(rest.begin(), rest.end(), nullptr, false);
  if (!whole.is_discarded() && whole.is_array()) {
    axis.values.assign(whole.begin(), whole.end());
    if (axis.values.empty()) throw ConfigError("grid axis " + axis.key + " has no values");
    return axis;
  }
  while (true) {
    const std::size_t comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    Json value = Json::parse(item.begin(), item.end(), nullptr, false);
    if (value.is_discarded()) value = std::string(item);
    axis.values.push_back(std::move(value));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return axis;
}

std::vector<SweepRow> RunSweep(const Json& base_config, const std::vector<SweepAxis>& grid,
                               std::size_t jobs) {
  const ExperimentConfig base = ConfigFromJson(base_config);
  std::size_t n_cells = 1;
  for (const SweepAxis& axis : grid) {
    if (axis.values.empty()) throw ConfigError("grid axis " + axis.key + " has no values");
    n_cells *= axis.values.size();
  }
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < n_cells; ++i) {
    Json json = base_config;
    Cell cell;
    std::size_t rem = i;
    std::vector<std::size_t> pick(grid.size());
    for (std::size_t a = grid.size(); a-- > 0;) {
      pick[a] = rem % grid[a].values.size();
      rem /= grid[a].values.size();
    }
    for (std::size_t a = 0; a < grid.size(); ++a) {
      const Json& value = grid[a].values[pick[a]];
      ApplyOverride(json, grid[a].key, value);
      cell.settings.emplace_back(grid[a].key, value.is_string() ? value.get<std::string>()
                                                                : value.dump());
    }
    json["seed"] = grid.empty() ? base.seed : DeriveSeed(base.seed, i);
    try {
      cell.config = ConfigFromJson(json);
    } catch (const ConfigError& e) {
      throw ConfigError("sweep cell " + std::to_string(i) + ": " + e.what());
    }
    cells.push_back(std::move(cell));
  }

  std::vector<SweepRow> rows(n_cells);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n_cells; ++i) rows[i] = RunCell(cells[i]);
    return rows;
  }
  // Cells share no mutable state, so a simple wave of async runs suffices.
  for (std::size_t start = 0; start < n_cells; start += jobs) {
    std::vector<std::future<SweepRow>> wave;
    for (std::size_t i = start; i < std::min(n_cells, start + jobs); ++i) {
      wave.push_back(std::async(std::launch::async, RunCell, std::cref(cells[i])));
    }
    for (std::size_t k = 0; k < wave.size(); ++k) rows[start + k] = wave[k].get();
  }
  return rows;
}

void WriteSweepCsv(std::ostream& out, const std::vector<SweepAxis>& grid,
                   const std::vector<SweepRow>& rows) {
  for (const SweepAxis& axis : grid) out << axis.key << ',';
  out << "seed,score_method,fpr95,auroc,aupr,error_rate,acc\n";
  for (const SweepRow& r : rows) {
    for (const auto& [key, value] : r.settings) out << value << ',';
    out << r.seed << ',' << r.score_method << ',' << FormatDouble(r.fpr95) << ','
        << FormatDouble(r.auroc) << ',' << FormatDouble(r.aupr) << ','
        << FormatDouble(r.error_rate) << ',' << FormatDouble(r.acc) << '\n';
  }
}

}  // namespace uenl
