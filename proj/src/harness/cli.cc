#include "uenl/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "uenl/config.h"
#include "uenl/errors.h"
#include "uenl/evaluate.h"
#include "uenl/format.h"
#include "uenl/sweep.h"
#include "uenl/train.h"

namespace uenl {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Exit status for a malformed command line.
constexpr int kUsageError = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void AddConfigOptions(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.path, "Experiment config (JSON)")->required();
  cmd->add_option("--set", args.overrides, "Override a config field: key.path=value");
  cmd->add_option("--seed", args.seed, "Override the seed");
}

Json LoadConfigJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  Json json = Json::parse(in, nullptr, false);
  if (json.is_discarded()) throw ConfigError("config file " + path + " is not valid JSON");
  return json;
}

// Config JSON with overrides applied, validated by a full parse.
Json ResolveConfigJson(const ConfigArgs& args, const char* seed_key) {
  Json json = LoadConfigJson(args.path);
  for (const std::string& o : args.overrides) ApplyAssignment(json, o);
  if (args.seed) ApplyOverride(json, seed_key, Json(*args.seed));
  (void)ConfigFromJson(json);
  return json;
}

template <typename Fn>
void WriteTo(const std::string& path, Fn write) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write(out);
  if (!out) throw DataError("failed writing " + path);
}

bool CsvHasLabels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  return header == "label" || header.ends_with(",label");
}

int GenData(const ConfigArgs& args, const std::string& out_dir, std::ostream& out) {
  const ExperimentConfig config = ConfigFromJson(ResolveConfigJson(args, "data.seed"));
  const PreparedData data = PrepareData(config.data);
  fs::create_directories(out_dir);
  auto save = [&](const Dataset& d, const std::string& file) {
    SaveCsv(fs::path(out_dir) / file, ToRawSpace(d));
    out << "wrote " << (fs::path(out_dir) / file).string() << " (" << d.size() << " x "
        << d.dim() << ")\n";
  };
  save(data.train, "id_train.csv");
  save(data.test, "id_test.csv");
  for (const Dataset& d : data.ood) save(d, d.name + ".csv");
  return 0;
}

int TrainCommand(const ConfigArgs& args, const std::string& out_path,
                 const std::string& log_csv, bool quiet, std::ostream& out) {
  const ExperimentConfig config = ConfigFromJson(ResolveConfigJson(args, "seed"));
  const PreparedData data = PrepareData(config.data);
  const Checkpoint ckpt = Train(config, data, quiet ? nullptr : &out);
  SaveCheckpoint(out_path, ckpt);
  if (!log_csv.empty()) {
    WriteTo(log_csv, [&](std::ostream& o) { WriteEpochLogCsv(o, ckpt.epoch_log); });
  }
  out << "wrote checkpoint " << out_path << '\n';
  return 0;
}

int EvalCommand(const std::string& ckpt_path, const std::string& id_path,
                const std::vector<std::string>& ood_paths, const std::string& methods,
                const std::string& out_dir, std::ostream& out) {
  const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  const std::vector<ScoreMethod> score_methods =
      methods.empty() ? ckpt.config.score_methods : ParseScoreMethodList(methods);
  Dataset id_test;
  std::vector<Dataset> ood;
  if (id_path.empty() || ood_paths.empty()) {
    const PreparedData data = PrepareData(ckpt.config.data);
    if (data.stats != ckpt.normalization) {
      throw DataError("regenerated training data does not match the checkpoint statistics");
    }
    id_test = data.test;
    ood = data.ood;
  }
  if (!id_path.empty()) {
    id_test = Standardize(LoadCsv(id_path, true), ckpt.normalization);
    id_test.name = "id_test";
  }
  if (!ood_paths.empty()) {
    ood.clear();
    for (const std::string& p : ood_paths) {
      Dataset d = LoadCsv(p, CsvHasLabels(p));
      d.labels.reset();
      ood.push_back(Standardize(d, ckpt.normalization));
    }
  }
  const EvalReport report = Evaluate(ckpt, id_test, ood, score_methods);
  WriteReportDir(out_dir, report);
  WriteMetricsCsv(out, report.metrics);
  WriteAccuracyCsv(out, report.accuracy);
  return 0;
}

int SweepCommand(const ConfigArgs& args, const std::vector<std::string>& grid_args,
                 std::size_t jobs, const std::string& out_path, std::ostream& out) {
  const Json base = ResolveConfigJson(args, "seed");
  std::vector<SweepAxis> grid;
  for (const std::string& g : grid_args) grid.push_back(ParseSweepAxis(g));
  const std::vector<SweepRow> rows = RunSweep(base, grid, jobs);
  WriteTo(out_path, [&](std::ostream& o) { WriteSweepCsv(o, grid, rows); });
  WriteSweepCsv(out, grid, rows);
  return 0;
}

int HistCommand(const std::string& scores_path, std::size_t bins, const std::string& out_path,
                std::ostream& out) {
  if (bins == 0) throw UsageError("--bins must be >= 1");
  std::ifstream in(scores_path);
  if (!in) throw DataError("cannot open " + scores_path);
  std::string id_name;
  const std::vector<ScoreSet> sets = ReadScoresCsv(in, scores_path, id_name);
  const std::vector<HistogramRow> rows = ScoreHistograms(sets, id_name, bins);
  if (out_path.empty()) {
    WriteHistogramCsv(out, rows);
  } else {
    WriteTo(out_path, [&](std::ostream& o) { WriteHistogramCsv(o, rows); });
  }
  return 0;
}

std::string OneLine(std::string message) {
  std::replace(message.begin(), message.end(), '\n', ' ');
  return message;
}

}  // namespace

int RunCli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Uncertainty estimation with normalized logits: OOD detection toolkit",
               "uenl");
  app.require_subcommand(1);

  ConfigArgs gen_args;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen-data", "Write the configured datasets as CSV");
  AddConfigOptions(gen, gen_args);
  gen->add_option("--out-dir", gen_out, "Output directory")->required();

  ConfigArgs train_args;
  std::string train_out;
  std::string train_log;
  bool quiet = false;
  CLI::App* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  AddConfigOptions(train, train_args);
  train->add_option("--out", train_out, "Checkpoint path (.ckpt.json)")->required();
  train->add_option("--log-csv", train_log, "Per-epoch log CSV");
  train->add_flag("--quiet", quiet, "Do not print per-epoch progress");

  std::string ckpt_path;
  std::string id_path;
  std::vector<std::string> ood_paths;
  std::string methods;
  std::string eval_out;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", ckpt_path, "Checkpoint path")->required();
  eval->add_option("--id", id_path, "Labeled ID test CSV (default: from the config)");
  eval->add_option("--ood", ood_paths, "OOD CSV files (default: from the config)");
  eval->add_option("--methods", methods, "Comma-separated scoring methods");
  eval->add_option("--out-dir", eval_out, "Report directory")->required();

  ConfigArgs sweep_args;
  std::vector<std::string> grid;
  std::size_t jobs = 1;
  std::string sweep_out;
  CLI::App* sweep = app.add_subcommand("sweep", "Train and evaluate a config grid");
  AddConfigOptions(sweep, sweep_args);
  sweep->add_option("--grid", grid, "Grid axis key=v1,v2,...");
  sweep->add_option("--jobs", jobs, "Cells run in parallel")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "Output CSV")->required();

  std::string scores_path;
  std::size_t bins = 30;
  std::string hist_out;
  CLI::App* hist = app.add_subcommand("hist", "Histograms from a scores CSV");
  hist->add_option("--scores", scores_path, "Scores CSV")->required();
  hist->add_option("--bins", bins, "Number of bins");
  hist->add_option("--out", hist_out, "Output CSV (default: stdout)");

  std::vector<std::string> args(argv.rbegin(), argv.rend() - (argv.empty() ? 0 : 1));
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "uenl: error: " << OneLine(e.what()) << '\n';
    return kUsageError;
  }

  try {
    if (*gen) return GenData(gen_args, gen_out, out);
    if (*train) return TrainCommand(train_args, train_out, train_log, quiet, out);
    if (*eval) return EvalCommand(ckpt_path, id_path, ood_paths, methods, eval_out, out);
    if (*sweep) return SweepCommand(sweep_args, grid, jobs, sweep_out, out);
    if (*hist) return HistCommand(scores_path, bins, hist_out, out);
  } catch (const UsageError& e) {
    err << "uenl: error: " << OneLine(e.what()) << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "uenl: error: " << OneLine(e.what()) << '\n';
    return 1;
  }
  return kUsageError;
}

}  // namespace uenl
