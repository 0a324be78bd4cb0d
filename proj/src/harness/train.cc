#include "uenl/train.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "uenl/errors.h"
#include "uenl/loss.h"
#include "uenl/metrics.h"
#include "uenl/rng.h"

namespace uenl {
namespace {

std::uint64_t SubSeed(std::uint64_t seed, std::string_view name) {
  return DeriveSeed(seed, HashName(name));
}

Dataset LoadLabeled(const DataSpec& spec, const std::string& path,
                    const std::string& labels_path, const std::string& name) {
  Dataset out = spec.source == "csv" ? LoadCsv(path, true)
                                     : LoadIdx(path, labels_path, name);
  out.name = name;
  out.Validate();
  if (!out.labels) throw DataError(path + " has no labels");
  if (out.size() == 0) throw DataError(path + " has no samples");
  return out;
}

// Holds out a seeded fraction of the training rows.
std::pair<Dataset, Dataset> SplitValidation(const Dataset& train, double fraction,
                                            std::uint64_t seed) {
  const std::vector<std::size_t> order =
      EpochPermutation(train.size(), SubSeed(seed, "validation-split"), 0);
  const std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(fraction * static_cast<double>(train.size())));
  if (n_val >= train.size()) throw DataError("validation split leaves no training data");
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(rest.begin(), rest.end());
  return {Subset(train, rest, train.name), Subset(train, val, "validation")};
}

}  // namespace

Dataset PrepareOodSet(const OodSpec& ood, const DataSpec& spec, const Normalization& stats,
                      const std::optional<Tensor>& cluster_means) {
  const std::string name = ood.DisplayName();
  const std::uint64_t seed = SubSeed(spec.seed, "ood:" + name);
  Dataset out;
  if (ood.kind == "uniform") {
    out = GenUniformOod(ood.n, stats, ood.low, ood.high, seed);
  } else if (ood.kind == "gaussian_noise") {
    out = GenGaussianNoiseOod(ood.n, stats, seed);
  } else if (ood.kind == "shifted_gaussian") {
    if (!cluster_means) throw ConfigError("shifted_gaussian OOD needs gaussian ID data");
    out = Standardize(GenShiftedGaussianOod(*cluster_means, ood.shift, ood.n, spec.sigma, seed),
                      stats);
  } else if (ood.kind == "csv") {
    out = Standardize(LoadCsv(ood.path, false), stats);
  } else if (ood.kind == "idx") {
    out = Standardize(LoadIdx(ood.path, std::nullopt, name), stats);
  } else {
    throw ConfigError("unknown OOD kind '" + ood.kind + "'");
  }
  if (out.size() == 0) throw DataError("OOD set " + name + " is empty");
  out.name = name;
  out.labels.reset();
  return out;
}

PreparedData PrepareData(const DataSpec& spec) {
  PreparedData out;
  Dataset train_raw;
  Dataset test_raw;
  if (spec.source == "gaussian") {
    const Tensor means = RandomClusterMeans(spec.num_classes, spec.dim, spec.mean_scale,
                                            SubSeed(spec.seed, "means"));
    train_raw = GenGaussianClusters(means, spec.train_per_class, spec.sigma,
                                    SubSeed(spec.seed, "train"));
    test_raw = GenGaussianClusters(means, spec.test_per_class, spec.sigma,
                                   SubSeed(spec.seed, "test"));
    out.cluster_means = means;
  } else if (spec.source == "csv" || spec.source == "idx") {
    train_raw = LoadLabeled(spec, spec.train_path, spec.train_labels_path, "id_train");
    test_raw = LoadLabeled(spec, spec.test_path, spec.test_labels_path, "id_test");
  } else {
    throw ConfigError("unknown data source '" + spec.source + "'");
  }
  train_raw.name = "id_train";
  test_raw.name = "id_test";
  if (test_raw.dim() != train_raw.dim()) {
    throw DataError("ID test set has " + std::to_string(test_raw.dim()) +
                    " features, training set has " + std::to_string(train_raw.dim()));
  }
  out.num_classes = static_cast<std::size_t>(train_raw.num_classes());
  if (out.num_classes < 2) throw DataError("ID training set needs at least 2 classes");
  if (static_cast<std::size_t>(test_raw.num_classes()) > out.num_classes) {
    throw DataError("ID test set has a label outside the training classes");
  }
  out.train = Standardize(train_raw);
  out.stats = *out.train.normalization;
  out.test = Standardize(test_raw, out.stats);
  for (const OodSpec& o : spec.ood) {
    out.ood.push_back(PrepareOodSet(o, spec, out.stats, out.cluster_means));
  }
  return out;
}

Dataset ToRawSpace(const Dataset& data) {
  if (!data.normalization) return data;
  const Normalization& s = *data.normalization;
  std::vector<double> x(data.features.values());
  const std::size_t d = data.dim();
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = s.mean[i % d] + std::max(s.std[i % d], kMinFeatureStd) * x[i];
  }
  Dataset out = data;
  out.features = Tensor(data.features.shape(), std::move(x));
  out.normalization.reset();
  return out;
}

std::vector<int> PredictLabels(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("logits must be B x k");
  const std::size_t k = logits.dim(1);
  std::vector<int> out(logits.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto row = logits.data().subspan(i * k, k);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Checkpoint Train(const ExperimentConfig& config, const PreparedData& data,
                 std::ostream* log) {
  config.Validate();
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.input_dim = data.train.dim();
  ckpt.num_classes = data.num_classes;
  ckpt.normalization = data.stats;
  ckpt.input_range = ObservedRange(data.train.features);
  const Network net = ckpt.MakeNetwork();

  Dataset train = data.train;
  std::optional<Dataset> val_id;
  std::optional<Dataset> val_noise;
  if (config.select_best_on_validation) {
    auto [rest, held_out] = SplitValidation(data.train, config.data.validation_fraction,
                                            config.seed);
    train = std::move(rest);
    val_id = std::move(held_out);
    val_noise = GenGaussianNoiseOod(config.data.validation_noise, data.stats,
                                    SubSeed(config.data.seed, "validation-noise"));
  }
  const std::vector<int>& test_labels = *data.test.labels;

  ckpt.params = net.InitParams(RngStream(config.seed, "init"));
  RngStream dropout_rng(config.seed, "dropout");
  RngStream resample_rng(config.seed, "resample");
  const std::uint64_t shuffle_seed = SubSeed(config.seed, "shuffle");
  const UenlOptions loss_options = config.LossOptions();
  OptState velocity;
  std::optional<double> best_auroc;
  ModelParams best_params;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = LrAtEpoch(epoch, config.lr, config.lr_drop_epochs);
    BatchIter batches(train, config.batch_size, shuffle_seed, epoch);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    while (std::optional<Batch> batch = batches.Next()) {
      const std::string where =
          " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index);
      ModelParams& params = ckpt.params;
      const ParamVars vars = BindParams(params);
      const BackboneOutput out = net.Backbone(params, vars, Constant(batch->features),
                                              Mode::kTrain, &dropout_rng);
      TensorMap buffer_updates = out.updated_buffers;
      Var loss;
      switch (config.method) {
        case Method::kCe:
          loss = PlainCe(out.logits, batch->labels);
          break;
        case Method::kLogitNorm:
          loss = LogitNormCe(out.logits, batch->labels, config.temperature);
          break;
        case Method::kUenl: {
          const HeadOutput head = net.Uncertainty(params, vars, out.embedding, Mode::kTrain);
          buffer_updates.insert(head.updated_buffers.begin(), head.updated_buffers.end());
          loss = UenlTotal(out.logits, head.uncertainty, batch->labels, loss_options,
                           resample_rng)
                     .total;
          break;
        }
      }
      const double value = loss->value().item();
      if (!std::isfinite(value)) throw NumericError("non-finite loss" + where);
      TensorMap grads;
      try {
        const Gradients g = Backward(loss);
        for (const auto& [name, var] : vars) {
          if (g.Contains(var)) grads.emplace(name, g.Of(var));
        }
        const TensorMap buffers_before = params.buffers;
        SgdStep(params.trainable, grads, velocity, lr, config.momentum, config.weight_decay);
        if (params.buffers != buffers_before) {
          throw Error("optimizer step modified batch-norm running statistics");
        }
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + where);
      }
      CommitBuffers(params, buffer_updates);
      ckpt.loss_trace.push_back(value);
      loss_sum += value;
      ++batch_index;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr;
    entry.mean_loss = loss_sum / static_cast<double>(batch_index);
    entry.test_error = ErrorRate(
        PredictLabels(net.Predict(ckpt.params, data.test.features).logits), test_labels);
    if (val_id) {
      const ForwardOutput id_out = net.Predict(ckpt.params, val_id->features);
      const ForwardOutput noise_out = net.Predict(ckpt.params, val_noise->features);
      auto primary = [&](const ForwardOutput& o, const Tensor& x) {
        return config.PrimaryScore() == ScoreMethod::kUncertainty
                   ? UncertaintyScores(net, ckpt.params, x)
                   : MspScores(o.logits);
      };
      const double auroc = Auroc(primary(id_out, val_id->features),
                                 primary(noise_out, val_noise->features));
      entry.validation_auroc = auroc;
      if (!best_auroc || auroc > *best_auroc) {
        best_auroc = auroc;
        best_params = ckpt.params;
        ckpt.selected_epoch = epoch;
      }
    }
    ckpt.epoch_log.push_back(entry);
    if (log) {
      *log << "epoch " << epoch << " lr " << lr << " loss " << entry.mean_loss
           << " test_error " << entry.test_error;
      if (entry.validation_auroc) *log << " val_auroc " << *entry.validation_auroc;
      *log << '\n';
    }
  }
  ckpt.epochs_run = config.epochs;
  if (ckpt.selected_epoch) ckpt.params = std::move(best_params);
  return ckpt;
}

}  // namespace uenl
