#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "uenl/loss.h"

namespace uenl {

enum class Method { kUenl, kCe, kLogitNorm };
enum class ScoreMethod { kMsp, kEnergy, kOdin, kUncertainty };

std::string_view MethodName(Method method);
Method ParseMethod(std::string_view name);
std::string_view ScoreMethodName(ScoreMethod method);
ScoreMethod ParseScoreMethod(std::string_view name);
// Comma-separated list such as "msp,energy,uncertainty".
std::vector<ScoreMethod> ParseScoreMethodList(std::string_view list);

// One OOD evaluation set.
struct OodSpec {
  // uniform | gaussian_noise | shifted_gaussian | csv | idx
  std::string kind;
  // Report name; defaults to the kind or the file stem.
  std::string name;
  // Samples (per class for shifted_gaussian).
  std::size_t n = 500;
  // uniform: bounds in standardized units.
  double low = -3.0;
  double high = 3.0;
  // shifted_gaussian: offset added to every mean coordinate.
  double shift = 2.0;
  // csv: unlabeled feature file; idx: image file.
  std::string path;

  std::string DisplayName() const;
};

struct DataSpec {
  // gaussian | csv | idx
  std::string source = "gaussian";
  std::uint64_t seed = 0;
  // gaussian source.
  std::size_t num_classes = 3;
  std::size_t dim = 16;
  double sigma = 0.2;
  double mean_scale = 1.0;
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 200;
  // csv source: labeled files. idx source: image files plus label files.
  std::string train_path;
  std::string test_path;
  std::string train_labels_path;
  std::string test_labels_path;
  std::vector<OodSpec> ood;
  // Gaussian-noise validation set size and the held-out fraction of the
  // training set, used only with select_best_on_validation.
  std::size_t validation_noise = 500;
  double validation_fraction = 0.1;
};

struct ExperimentConfig {
  Method method = Method::kUenl;
  std::uint64_t seed = 0;

  std::vector<std::size_t> hidden_dims = {64};
  std::size_t embed_dim = 32;
  bool use_batchnorm = true;
  double dropout = 0.3;

  std::size_t delta = 32;
  double lambda = 0.1;
  // LogitNorm temperature.
  double temperature = 0.04;
  double uhat_scale = 1.0;
  KlForm kl_form = KlForm::kVariance;
  std::optional<double> pinned_temperature;
  bool scalar_uncertainty = false;

  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::vector<std::size_t> lr_drop_epochs = {80, 140};

  std::vector<ScoreMethod> score_methods = {ScoreMethod::kMsp, ScoreMethod::kEnergy,
                                            ScoreMethod::kOdin,
                                            ScoreMethod::kUncertainty};
  double energy_temperature = 0.1;
  double odin_temperature = 1000.0;
  double odin_epsilon = 0.0014;
  std::size_t histogram_bins = 30;

  bool select_best_on_validation = false;

  DataSpec data;

  // Throws ConfigError naming the offending field.
  void Validate() const;
  UenlOptions LossOptions() const;
  // Score used for sweep rows and validation selection: uncertainty for
  // uenl, msp otherwise.
  ScoreMethod PrimaryScore() const;
};

nlohmann::ordered_json ConfigToJson(const ExperimentConfig& config);
// Rejects unknown keys and wrong types with a ConfigError naming the key
// path, then validates.
ExperimentConfig ConfigFromJson(const nlohmann::ordered_json& json);
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// Sets `path` (dot-separated, e.g. "lambda" or "data.sigma") to `value`,
// which is parsed as JSON and otherwise taken as a string.
void ApplyOverride(nlohmann::ordered_json& json, std::string_view path,
                   std::string_view value);
void ApplyOverride(nlohmann::ordered_json& json, std::string_view path,
                   const nlohmann::ordered_json& value);

// "key=value" form of ApplyOverride.
void ApplyAssignment(nlohmann::ordered_json& json, std::string_view assignment);

}  // namespace uenl
