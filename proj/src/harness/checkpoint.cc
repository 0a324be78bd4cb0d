#include "uenl/checkpoint.h"

#include <fstream>
#include <sstream>

#include "uenl/errors.h"

namespace uenl {
namespace {

using Json = nlohmann::ordered_json;

Json TensorToJson(const Tensor& t) {
  Json j;
  j["shape"] = t.shape();
  j["data"] = t.values();
  return j;
}

Json MapToJson(const TensorMap& map) {
  Json j = Json::object();
  for (const auto& [name, t] : map) j[name] = TensorToJson(t);
  return j;
}

// Errors during parsing carry the source name and the JSON path.
class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void Fail(const std::string& what) const {
    throw DataError(source_ + ": " + what);
  }

  const Json& Field(const Json& obj, const std::string& key) const {
    if (!obj.is_object() || !obj.contains(key)) Fail("missing field '" + key + "'");
    return obj.at(key);
  }

  std::vector<double> Doubles(const Json& j, const std::string& what) const {
    if (!j.is_array()) Fail(what + " must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const Json& v : j) {
      if (!v.is_number()) Fail(what + " must contain only numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }

  Tensor ToTensor(const Json& j, const std::string& what) const {
    const Json& shape = Field(j, "shape");
    if (!shape.is_array()) Fail(what + ".shape must be an array");
    Shape s;
    for (const Json& d : shape) {
      if (!d.is_number_unsigned()) Fail(what + ".shape must hold non-negative integers");
      s.push_back(d.get<std::size_t>());
    }
    std::vector<double> data = Doubles(Field(j, "data"), what + ".data");
    if (data.size() != NumElements(s)) {
      Fail(what + " has " + std::to_string(data.size()) + " values for shape " +
           ShapeToString(s));
    }
    return Tensor(std::move(s), std::move(data));
  }

  TensorMap ToMap(const Json& j, const std::string& what) const {
    if (!j.is_object()) Fail(what + " must be an object");
    TensorMap out;
    for (const auto& [name, value] : j.items()) {
      out.emplace(name, ToTensor(value, what + "." + name));
    }
    return out;
  }

  std::size_t Count(const Json& j, const std::string& what) const {
    if (!j.is_number_unsigned()) Fail(what + " must be a non-negative integer");
    return j.get<std::size_t>();
  }

 private:
  std::string source_;
};

}  // namespace

Network MakeNetwork(const ExperimentConfig& config, std::size_t input_dim,
                    std::size_t num_classes) {
  BackboneConfig b;
  b.input_dim = input_dim;
  b.hidden_dims = config.hidden_dims;
  b.embed_dim = config.embed_dim;
  b.num_classes = num_classes;
  b.dropout_rate = config.dropout;
  b.use_batchnorm = config.use_batchnorm;
  UncertaintyHeadConfig h;
  h.embed_dim = config.embed_dim;
  h.delta = config.delta;
  h.scalar_uncertainty = config.scalar_uncertainty;
  return Network(b, h);
}

Network Checkpoint::MakeNetwork() const {
  return uenl::MakeNetwork(config, input_dim, num_classes);
}

std::string SerializeCheckpoint(const Checkpoint& c) {
  Json j;
  j["format"] = "uenl-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = ConfigToJson(c.config);
  j["input_dim"] = c.input_dim;
  j["num_classes"] = c.num_classes;
  j["normalization"] = {{"mean", c.normalization.mean}, {"std", c.normalization.std}};
  j["input_range"] = {{"low", c.input_range.low}, {"high", c.input_range.high}};
  j["params"] = MapToJson(c.params.trainable);
  j["buffers"] = MapToJson(c.params.buffers);
  j["epochs_run"] = c.epochs_run;
  j["selected_epoch"] = c.selected_epoch ? Json(*c.selected_epoch) : Json(nullptr);
  j["loss_trace"] = c.loss_trace;
  Json log = Json::array();
  for (const EpochLog& e : c.epoch_log) {
    Json row;
    row["epoch"] = e.epoch;
    row["lr"] = e.lr;
    row["mean_loss"] = e.mean_loss;
    row["test_error"] = e.test_error;
    row["validation_auroc"] =
        e.validation_auroc ? Json(*e.validation_auroc) : Json(nullptr);
    log.push_back(std::move(row));
  }
  j["epoch_log"] = std::move(log);
  return j.dump(1) + "\n";
}

Checkpoint ParseCheckpoint(const std::string& text, const std::string& source) {
  const Parser p(source);
  const Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) p.Fail("not valid JSON");
  if (!j.is_object() || j.value("format", "") != "uenl-checkpoint") {
    p.Fail("not a uenl checkpoint");
  }
  const Json& version = p.Field(j, "version");
  if (!version.is_number_integer() || version.get<int>() != kCheckpointVersion) {
    p.Fail("unsupported checkpoint version " + version.dump() + ", expected " +
           std::to_string(kCheckpointVersion));
  }
  Checkpoint c;
  try {
    c.config = ConfigFromJson(p.Field(j, "config"));
  } catch (const ConfigError& e) {
    p.Fail(std::string("embedded config: ") + e.what());
  }
  c.input_dim = p.Count(p.Field(j, "input_dim"), "input_dim");
  c.num_classes = p.Count(p.Field(j, "num_classes"), "num_classes");
  const Json& norm = p.Field(j, "normalization");
  c.normalization.mean = p.Doubles(p.Field(norm, "mean"), "normalization.mean");
  c.normalization.std = p.Doubles(p.Field(norm, "std"), "normalization.std");
  const Json& range = p.Field(j, "input_range");
  c.input_range.low = p.Doubles(p.Field(range, "low"), "input_range.low");
  c.input_range.high = p.Doubles(p.Field(range, "high"), "input_range.high");
  if (c.normalization.mean.size() != c.input_dim || c.normalization.std.size() != c.input_dim ||
      c.input_range.low.size() != c.input_dim || c.input_range.high.size() != c.input_dim) {
    p.Fail("normalization or input range width differs from input_dim");
  }
  c.params.trainable = p.ToMap(p.Field(j, "params"), "params");
  c.params.buffers = p.ToMap(p.Field(j, "buffers"), "buffers");
  c.epochs_run = p.Count(p.Field(j, "epochs_run"), "epochs_run");
  const Json& selected = p.Field(j, "selected_epoch");
  if (!selected.is_null()) c.selected_epoch = p.Count(selected, "selected_epoch");
  c.loss_trace = p.Doubles(p.Field(j, "loss_trace"), "loss_trace");
  const Json& log = p.Field(j, "epoch_log");
  if (!log.is_array()) p.Fail("epoch_log must be an array");
  for (const Json& row : log) {
    EpochLog e;
    e.epoch = p.Count(p.Field(row, "epoch"), "epoch_log.epoch");
    e.lr = p.Doubles(Json::array({p.Field(row, "lr")}), "epoch_log.lr")[0];
    e.mean_loss = p.Doubles(Json::array({p.Field(row, "mean_loss")}), "epoch_log.mean_loss")[0];
    e.test_error =
        p.Doubles(Json::array({p.Field(row, "test_error")}), "epoch_log.test_error")[0];
    const Json& v = p.Field(row, "validation_auroc");
    if (!v.is_null()) {
      e.validation_auroc = p.Doubles(Json::array({v}), "epoch_log.validation_auroc")[0];
    }
    c.epoch_log.push_back(e);
  }
  try {
    c.MakeNetwork().CheckParams(c.params);
  } catch (const ShapeError& e) {
    p.Fail(std::string("parameters do not match the config: ") + e.what());
  }
  return c;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string text = SerializeCheckpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << text;
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseCheckpoint(buffer.str(), path.string());
}

}  // namespace uenl
