#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uenl/config.h"
#include "uenl/data.h"
#include "uenl/model.h"
#include "uenl/scoring.h"

namespace uenl {

inline constexpr int kCheckpointVersion = 1;

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double test_error = 0.0;
  std::optional<double> validation_auroc;
};

// Everything needed to rebuild and evaluate a trained model.
struct Checkpoint {
  ExperimentConfig config;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  ModelParams params;
  Normalization normalization;
  // Per-feature range of the standardized training inputs.
  InputRange input_range;
  std::size_t epochs_run = 0;
  // Set when the parameters come from the best validation epoch.
  std::optional<std::size_t> selected_epoch;
  std::vector<double> loss_trace;
  std::vector<EpochLog> epoch_log;

  Network MakeNetwork() const;
};

Network MakeNetwork(const ExperimentConfig& config, std::size_t input_dim,
                    std::size_t num_classes);

// JSON text with shortest round-trip doubles, so equal checkpoints give
// equal bytes and a reload restores every value exactly.
std::string SerializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint ParseCheckpoint(const std::string& text, const std::string& source);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace uenl
