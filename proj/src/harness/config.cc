#include "uenl/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "uenl/errors.h"

namespace uenl {
namespace {

using Json = nlohmann::ordered_json;

std::string Join(const std::string& prefix, std::string_view key) {
  return prefix.empty() ? std::string(key) : prefix + "." + std::string(key);
}

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& json, std::string path) : json_(json), path_(std::move(path)) {
    if (!json_.is_object()) {
      throw ConfigError((path_.empty() ? "config" : path_) + " must be a JSON object");
    }
  }

  template <typename T>
  void Get(std::string_view key, T& out) {
    known_.insert(std::string(key));
    const auto it = json_.find(std::string(key));
    if (it == json_.end()) return;
    Read(*it, Join(path_, key), out);
  }

  template <typename T, typename Fn>
  void GetWith(std::string_view key, T& out, Fn parse) {
    known_.insert(std::string(key));
    const auto it = json_.find(std::string(key));
    if (it == json_.end()) return;
    std::string text;
    Read(*it, Join(path_, key), text);
    out = parse(text);
  }

  const Json* Child(std::string_view key) {
    known_.insert(std::string(key));
    const auto it = json_.find(std::string(key));
    return it == json_.end() ? nullptr : &*it;
  }

  void Finish() const {
    for (const auto& [key, value] : json_.items()) {
      if (!known_.contains(key)) {
        throw ConfigError("unknown config key '" + Join(path_, key) + "'");
      }
    }
  }

 private:
  static void Read(const Json& v, const std::string& path, double& out) {
    if (!v.is_number()) throw ConfigError(path + " must be a number");
    out = v.get<double>();
  }
  static void Read(const Json& v, const std::string& path, std::size_t& out) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(path + " must be a non-negative integer");
    }
    out = v.get<std::size_t>();
  }
  static void Read(const Json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) throw ConfigError(path + " must be true or false");
    out = v.get<bool>();
  }
  static void Read(const Json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) throw ConfigError(path + " must be a string");
    out = v.get<std::string>();
  }
  static void Read(const Json& v, const std::string& path, std::optional<double>& out) {
    if (v.is_null()) {
      out.reset();
      return;
    }
    double d = 0.0;
    Read(v, path, d);
    out = d;
  }
  static void Read(const Json& v, const std::string& path,
                   std::vector<std::size_t>& out) {
    if (!v.is_array()) throw ConfigError(path + " must be an array of integers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::size_t x = 0;
      Read(v[i], path + "[" + std::to_string(i) + "]", x);
      out.push_back(x);
    }
  }

  const Json& json_;
  std::string path_;
  std::set<std::string> known_;
};

void Require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::string_view KlFormName(KlForm form) {
  return form == KlForm::kVariance ? "variance" : "stddev";
}

KlForm ParseKlForm(const std::string& name) {
  if (name == "variance") return KlForm::kVariance;
  if (name == "stddev") return KlForm::kStdDev;
  throw ConfigError("kl_form must be 'variance' or 'stddev', got '" + name + "'");
}

const std::set<std::string>& OodKinds() {
  static const std::set<std::string> kinds = {"uniform", "gaussian_noise",
                                              "shifted_gaussian", "csv", "idx"};
  return kinds;
}

OodSpec OodFromJson(const Json& json, const std::string& path) {
  OodSpec spec;
  ObjectReader r(json, path);
  r.Get("kind", spec.kind);
  r.Get("name", spec.name);
  r.Get("n", spec.n);
  r.Get("low", spec.low);
  r.Get("high", spec.high);
  r.Get("shift", spec.shift);
  r.Get("path", spec.path);
  r.Finish();
  Require(OodKinds().contains(spec.kind),
          path + ".kind must be one of uniform, gaussian_noise, shifted_gaussian, "
                 "csv, idx; got '" + spec.kind + "'");
  return spec;
}

Json OodToJson(const OodSpec& spec) {
  Json j;
  j["kind"] = spec.kind;
  if (!spec.name.empty()) j["name"] = spec.name;
  if (spec.kind == "csv" || spec.kind == "idx") {
    j["path"] = spec.path;
    return j;
  }
  j["n"] = spec.n;
  if (spec.kind == "uniform") {
    j["low"] = spec.low;
    j["high"] = spec.high;
  }
  if (spec.kind == "shifted_gaussian") j["shift"] = spec.shift;
  return j;
}

DataSpec DataFromJson(const Json& json) {
  DataSpec d;
  ObjectReader r(json, "data");
  r.Get("source", d.source);
  r.Get("seed", d.seed);
  r.Get("num_classes", d.num_classes);
  r.Get("dim", d.dim);
  r.Get("sigma", d.sigma);
  r.Get("mean_scale", d.mean_scale);
  r.Get("train_per_class", d.train_per_class);
  r.Get("test_per_class", d.test_per_class);
  r.Get("train_path", d.train_path);
  r.Get("test_path", d.test_path);
  r.Get("train_labels_path", d.train_labels_path);
  r.Get("test_labels_path", d.test_labels_path);
  r.Get("validation_noise", d.validation_noise);
  r.Get("validation_fraction", d.validation_fraction);
  if (const Json* ood = r.Child("ood")) {
    Require(ood->is_array(), "data.ood must be an array");
    for (std::size_t i = 0; i < ood->size(); ++i) {
      d.ood.push_back(OodFromJson((*ood)[i], "data.ood[" + std::to_string(i) + "]"));
    }
  }
  r.Finish();
  return d;
}

Json DataToJson(const DataSpec& d) {
  Json j;
  j["source"] = d.source;
  j["seed"] = d.seed;
  if (d.source == "gaussian") {
    j["num_classes"] = d.num_classes;
    j["dim"] = d.dim;
    j["sigma"] = d.sigma;
    j["mean_scale"] = d.mean_scale;
    j["train_per_class"] = d.train_per_class;
    j["test_per_class"] = d.test_per_class;
  } else {
    j["train_path"] = d.train_path;
    j["test_path"] = d.test_path;
    if (d.source == "idx") {
      j["train_labels_path"] = d.train_labels_path;
      j["test_labels_path"] = d.test_labels_path;
    }
  }
  j["ood"] = Json::array();
  for (const OodSpec& o : d.ood) j["ood"].push_back(OodToJson(o));
  j["validation_noise"] = d.validation_noise;
  j["validation_fraction"] = d.validation_fraction;
  return j;
}

}  // namespace

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kUenl:
      return "uenl";
    case Method::kCe:
      return "ce";
    case Method::kLogitNorm:
      return "logitnorm";
  }
  return "?";
}

Method ParseMethod(std::string_view name) {
  if (name == "uenl") return Method::kUenl;
  if (name == "ce") return Method::kCe;
  if (name == "logitnorm") return Method::kLogitNorm;
  throw ConfigError("method must be uenl, ce or logitnorm; got '" + std::string(name) +
                    "'");
}

std::string_view ScoreMethodName(ScoreMethod method) {
  switch (method) {
    case ScoreMethod::kMsp:
      return "msp";
    case ScoreMethod::kEnergy:
      return "energy";
    case ScoreMethod::kOdin:
      return "odin";
    case ScoreMethod::kUncertainty:
      return "uncertainty";
  }
  return "?";
}

ScoreMethod ParseScoreMethod(std::string_view name) {
  if (name == "msp") return ScoreMethod::kMsp;
  if (name == "energy") return ScoreMethod::kEnergy;
  if (name == "odin") return ScoreMethod::kOdin;
  if (name == "uncertainty") return ScoreMethod::kUncertainty;
  throw ConfigError("unknown scoring method '" + std::string(name) +
                    "' (expected msp, energy, odin or uncertainty)");
}

std::vector<ScoreMethod> ParseScoreMethodList(std::string_view list) {
  std::vector<ScoreMethod> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    out.push_back(ParseScoreMethod(list.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::string OodSpec::DisplayName() const {
  if (!name.empty()) return name;
  if (kind == "csv" || kind == "idx") return std::filesystem::path(path).stem().string();
  return kind;
}

void ExperimentConfig::Validate() const {
  Require(embed_dim >= 1, "embed_dim must be >= 1");
  for (std::size_t h : hidden_dims) Require(h >= 1, "hidden_dims entries must be >= 1");
  Require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  Require(delta >= 1, "delta must be >= 1");
  Require(lambda >= 0.0, "lambda must be >= 0");
  Require(temperature > 0.0, "temperature must be > 0");
  Require(uhat_scale > 0.0, "uhat_scale must be > 0");
  Require(!pinned_temperature || *pinned_temperature > 0.0,
          "pinned_temperature must be > 0");
  Require(epochs >= 1, "epochs must be >= 1");
  Require(batch_size >= 1, "batch_size must be >= 1");
  Require(lr > 0.0, "lr must be > 0");
  Require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
  Require(weight_decay >= 0.0, "weight_decay must be >= 0");
  Require(!score_methods.empty(), "score_methods must not be empty");
  Require(energy_temperature > 0.0, "energy_temperature must be > 0");
  Require(odin_temperature > 0.0, "odin_temperature must be > 0");
  Require(odin_epsilon >= 0.0, "odin_epsilon must be >= 0");
  Require(histogram_bins >= 1, "histogram_bins must be >= 1");

  Require(data.source == "gaussian" || data.source == "csv" || data.source == "idx",
          "data.source must be gaussian, csv or idx; got '" + data.source + "'");
  if (data.source == "gaussian") {
    Require(data.num_classes >= 2, "data.num_classes must be >= 2");
    Require(data.dim >= 1, "data.dim must be >= 1");
    Require(data.sigma > 0.0, "data.sigma must be > 0");
    Require(data.mean_scale > 0.0, "data.mean_scale must be > 0");
    Require(data.train_per_class >= 1, "data.train_per_class must be >= 1");
    Require(data.test_per_class >= 1, "data.test_per_class must be >= 1");
  } else {
    Require(!data.train_path.empty(), "data.train_path is required for " + data.source);
    Require(!data.test_path.empty(), "data.test_path is required for " + data.source);
    if (data.source == "idx") {
      Require(!data.train_labels_path.empty(), "data.train_labels_path is required");
      Require(!data.test_labels_path.empty(), "data.test_labels_path is required");
    }
  }
  std::set<std::string> names;
  for (const OodSpec& o : data.ood) {
    if (o.kind == "csv" || o.kind == "idx") {
      Require(!o.path.empty(), "OOD set of kind " + o.kind + " needs a path");
    } else {
      Require(o.n >= 1, "OOD set " + o.DisplayName() + " needs n >= 1");
      Require(o.kind != "shifted_gaussian" || data.source == "gaussian",
              "shifted_gaussian OOD needs the gaussian data source");
    }
    Require(o.kind != "uniform" || o.high > o.low, "uniform OOD needs high > low");
    Require(names.insert(o.DisplayName()).second,
            "duplicate OOD set name '" + o.DisplayName() + "'");
  }
  Require(data.validation_fraction > 0.0 && data.validation_fraction < 1.0,
          "data.validation_fraction must be in (0, 1)");
  Require(!select_best_on_validation || data.validation_noise >= 1,
          "data.validation_noise must be >= 1 when selecting on validation");
}

UenlOptions ExperimentConfig::LossOptions() const {
  UenlOptions options;
  options.lambda = lambda;
  options.uhat_scale = uhat_scale;
  options.kl_form = kl_form;
  options.pinned_temperature = pinned_temperature;
  return options;
}

ScoreMethod ExperimentConfig::PrimaryScore() const {
  return method == Method::kUenl ? ScoreMethod::kUncertainty : ScoreMethod::kMsp;
}

Json ConfigToJson(const ExperimentConfig& c) {
  Json j;
  j["method"] = MethodName(c.method);
  j["seed"] = c.seed;
  j["hidden_dims"] = c.hidden_dims;
  j["embed_dim"] = c.embed_dim;
  j["use_batchnorm"] = c.use_batchnorm;
  j["dropout"] = c.dropout;
  j["delta"] = c.delta;
  j["lambda"] = c.lambda;
  j["temperature"] = c.temperature;
  j["uhat_scale"] = c.uhat_scale;
  j["kl_form"] = KlFormName(c.kl_form);
  j["pinned_temperature"] =
      c.pinned_temperature ? Json(*c.pinned_temperature) : Json(nullptr);
  j["scalar_uncertainty"] = c.scalar_uncertainty;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["lr_drop_epochs"] = c.lr_drop_epochs;
  std::string methods;
  for (ScoreMethod m : c.score_methods) {
    methods += (methods.empty() ? "" : ",") + std::string(ScoreMethodName(m));
  }
  j["score_methods"] = methods;
  j["energy_temperature"] = c.energy_temperature;
  j["odin_temperature"] = c.odin_temperature;
  j["odin_epsilon"] = c.odin_epsilon;
  j["histogram_bins"] = c.histogram_bins;
  j["select_best_on_validation"] = c.select_best_on_validation;
  j["data"] = DataToJson(c.data);
  return j;
}

ExperimentConfig ConfigFromJson(const Json& json) {
  ExperimentConfig c;
  ObjectReader r(json, "");
  r.GetWith("method", c.method, [](const std::string& s) { return ParseMethod(s); });
  r.Get("seed", c.seed);
  r.Get("hidden_dims", c.hidden_dims);
  r.Get("embed_dim", c.embed_dim);
  r.Get("use_batchnorm", c.use_batchnorm);
  r.Get("dropout", c.dropout);
  r.Get("delta", c.delta);
  r.Get("lambda", c.lambda);
  r.Get("temperature", c.temperature);
  r.Get("uhat_scale", c.uhat_scale);
  r.GetWith("kl_form", c.kl_form, ParseKlForm);
  r.Get("pinned_temperature", c.pinned_temperature);
  r.Get("scalar_uncertainty", c.scalar_uncertainty);
  r.Get("epochs", c.epochs);
  r.Get("batch_size", c.batch_size);
  r.Get("lr", c.lr);
  r.Get("momentum", c.momentum);
  r.Get("weight_decay", c.weight_decay);
  r.Get("lr_drop_epochs", c.lr_drop_epochs);
  r.GetWith("score_methods", c.score_methods,
            [](const std::string& s) { return ParseScoreMethodList(s); });
  r.Get("energy_temperature", c.energy_temperature);
  r.Get("odin_temperature", c.odin_temperature);
  r.Get("odin_epsilon", c.odin_epsilon);
  r.Get("histogram_bins", c.histogram_bins);
  r.Get("select_best_on_validation", c.select_best_on_validation);
  if (const Json* data = r.Child("data")) c.data = DataFromJson(*data);
  r.Finish();
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json json;
  try {
    json = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return ConfigFromJson(json);
}

void ApplyOverride(Json& json, std::string_view path, const Json& value) {
  if (path.empty()) throw ConfigError("empty override key");
  Json* node = &json;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key(path.substr(start, dot == std::string_view::npos
                                                 ? std::string_view::npos
                                                 : dot - start));
    if (key.empty()) throw ConfigError("malformed override key '" + std::string(path) + "'");
    if (!node->is_object()) {
      throw ConfigError("override key '" + std::string(path) + "' descends into a non-object");
    }
    if (dot == std::string_view::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

void ApplyOverride(Json& json, std::string_view path, std::string_view value) {
  Json parsed = Json::parse(value.begin(), value.end(), nullptr, false);
  if (parsed.is_discarded()) parsed = std::string(value);
  ApplyOverride(json, path, parsed);
}

void ApplyAssignment(Json& json, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key=value");
  }
  ApplyOverride(json, assignment.substr(0, eq), assignment.substr(eq + 1));
}

}  // namespace uenl
