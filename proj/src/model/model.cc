#include "uenl/model.h"

#include <cmath>

#include "uenl/errors.h"

namespace uenl {
namespace {

constexpr double kBackboneBnMomentum = 0.1;
constexpr double kBackboneBnEpsilon = 1e-5;

std::string LayerName(std::size_t i) { return "backbone." + std::to_string(i); }

const Tensor& Find(const TensorMap& map, const std::string& name) {
  const auto it = map.find(name);
  if (it == map.end()) throw ShapeError("missing model tensor '" + name + "'");
  return it->second;
}

const Var& FindVar(const ParamVars& vars, const std::string& name) {
  const auto it = vars.find(name);
  if (it == vars.end()) throw ShapeError("missing parameter binding '" + name + "'");
  return it->second;
}

void AddLinear(TensorMap& trainable, const std::string& name, std::size_t in,
               std::size_t out, RngStream* rng) {
  std::vector<double> w(in * out, 0.0);
  if (rng != nullptr) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    for (double& v : w) v = rng->Uniform(-bound, bound);
  }
  trainable.emplace(name + ".weight", Tensor({in, out}, std::move(w)));
  trainable.emplace(name + ".bias", Tensor::Zeros({out}));
}

void AddBatchNorm(ModelParams& params, const std::string& name,
                  std::size_t width) {
  params.trainable.emplace(name + ".weight", Tensor::Ones({width}));
  params.trainable.emplace(name + ".bias", Tensor::Zeros({width}));
  params.buffers.emplace(name + ".running_mean", Tensor::Zeros({width}));
  params.buffers.emplace(name + ".running_var", Tensor::Ones({width}));
}

// Expected (name, shape) pairs in the order parameters are created.
struct Layout {
  std::vector<std::pair<std::string, Shape>> trainable;
  std::vector<std::pair<std::string, Shape>> buffers;
};

Layout ExpectedLayout(const BackboneConfig& b, const UncertaintyHeadConfig& h) {
  Layout layout;
  auto linear = [&](const std::string& name, std::size_t in, std::size_t out) {
    layout.trainable.push_back({name + ".weight", {in, out}});
    layout.trainable.push_back({name + ".bias", {out}});
  };
  auto bn = [&](const std::string& name, std::size_t width) {
    layout.trainable.push_back({name + ".weight", {width}});
    layout.trainable.push_back({name + ".bias", {width}});
    layout.buffers.push_back({name + ".running_mean", {width}});
    layout.buffers.push_back({name + ".running_var", {width}});
  };
  std::size_t in = b.input_dim;
  for (std::size_t i = 0; i < b.hidden_dims.size(); ++i) {
    linear(LayerName(i), in, b.hidden_dims[i]);
    if (b.use_batchnorm) bn(LayerName(i) + ".bn", b.hidden_dims[i]);
    in = b.hidden_dims[i];
  }
  linear("embed", in, b.embed_dim);
  if (b.use_batchnorm) bn("embed.bn", b.embed_dim);
  linear("classifier", b.embed_dim, b.num_classes);
  const std::size_t width = h.scalar_uncertainty ? 1 : h.delta;
  linear("head", h.embed_dim, width);
  bn("head.bn", width);
  return layout;
}

}  // namespace

void BackboneConfig::Validate() const {
  if (input_dim == 0) throw ConfigError("backbone input_dim must be >= 1");
  if (embed_dim == 0) throw ConfigError("backbone embed_dim must be >= 1");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  for (std::size_t d : hidden_dims) {
    if (d == 0) throw ConfigError("hidden dims must be >= 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
}

void UncertaintyHeadConfig::Validate() const {
  if (embed_dim == 0) throw ConfigError("head embed_dim must be >= 1");
  if (delta == 0) throw ConfigError("delta must be >= 1");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) {
    throw ConfigError("bn_momentum must lie in (0, 1]");
  }
  if (!(bn_epsilon > 0.0)) throw ConfigError("bn_epsilon must be positive");
}

ParamVars BindParams(const ModelParams& params) {
  ParamVars vars;
  for (const auto& [name, tensor] : params.trainable) {
    vars.emplace(name, Leaf(tensor));
  }
  return vars;
}

BatchNormResult BatchNorm(const Var& z, const Var& gamma, const Var& beta,
                          const Tensor& running_mean, const Tensor& running_var,
                          Mode mode, double momentum, double epsilon,
                          const std::string& buffer_prefix) {
  const std::size_t width = z->shape().at(1);
  if (running_mean.size() != width || running_var.size() != width) {
    throw ShapeError("batch norm '" + buffer_prefix +
                     "': running statistics do not match width " +
                     std::to_string(width));
  }
  BatchNormResult result;
  if (mode == Mode::kEval) {
    std::vector<double> std_dev(width);
    for (std::size_t j = 0; j < width; ++j) {
      if (!(running_var[j] > 0.0)) {
        throw NumericError("batch norm '" + buffer_prefix +
                           "': running variance must be positive");
      }
      std_dev[j] = std::sqrt(running_var[j] + epsilon);
    }
    result.normalized = Div(Sub(z, Constant(running_mean)),
                            Constant(Tensor({width}, std::move(std_dev))));
  } else {
    const std::size_t batch = z->shape()[0];
    if (batch == 0) throw ShapeError("batch norm on an empty batch");
    const Var mean = Mean(z, 0);
    const Var centered = Sub(z, mean);
    const Var var = Mean(Square(centered), 0);
    const Var std = Exp(Scale(Ln(Add(var, Constant(Tensor::Scalar(epsilon)))), 0.5));
    result.normalized = Div(centered, std);

    const double correction =
        batch > 1 ? static_cast<double>(batch) / static_cast<double>(batch - 1)
                  : 1.0;
    std::vector<double> new_mean(width), new_var(width);
    for (std::size_t j = 0; j < width; ++j) {
      new_mean[j] = (1.0 - momentum) * running_mean[j] +
                    momentum * mean->value()[j];
      new_var[j] = (1.0 - momentum) * running_var[j] +
                   momentum * var->value()[j] * correction;
    }
    result.updated_buffers.emplace(buffer_prefix + ".running_mean",
                                   Tensor({width}, std::move(new_mean)));
    result.updated_buffers.emplace(buffer_prefix + ".running_var",
                                   Tensor({width}, std::move(new_var)));
  }
  result.output = Add(Mul(result.normalized, gamma), beta);
  return result;
}

Var Dropout(const Var& h, double rate, RngStream& rng) {
  if (rate == 0.0) return h;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(h->value().size());
  for (double& m : mask) m = rng.Uniform() < rate ? 0.0 : keep_scale;
  return Mul(h, Constant(Tensor(h->shape(), std::move(mask))));
}

Network::Network(BackboneConfig backbone, UncertaintyHeadConfig head)
    : backbone_(std::move(backbone)), head_(std::move(head)) {
  backbone_.Validate();
  head_.Validate();
  if (head_.embed_dim != backbone_.embed_dim) {
    throw ConfigError("head embed_dim " + std::to_string(head_.embed_dim) +
                      " != backbone embed_dim " +
                      std::to_string(backbone_.embed_dim));
  }
}

ModelParams Network::InitParams(RngStream rng) const {
  ModelParams params;
  std::size_t in = backbone_.input_dim;
  for (std::size_t i = 0; i < backbone_.hidden_dims.size(); ++i) {
    AddLinear(params.trainable, LayerName(i), in, backbone_.hidden_dims[i], &rng);
    if (backbone_.use_batchnorm) {
      AddBatchNorm(params, LayerName(i) + ".bn", backbone_.hidden_dims[i]);
    }
    in = backbone_.hidden_dims[i];
  }
  AddLinear(params.trainable, "embed", in, backbone_.embed_dim, &rng);
  if (backbone_.use_batchnorm) AddBatchNorm(params, "embed.bn", backbone_.embed_dim);
  AddLinear(params.trainable, "classifier", backbone_.embed_dim,
            backbone_.num_classes, &rng);
  const std::size_t width = head_.scalar_uncertainty ? 1 : head_.delta;
  AddLinear(params.trainable, "head", head_.embed_dim, width, nullptr);
  AddBatchNorm(params, "head.bn", width);
  return params;
}

std::size_t Network::NumTrainableParameters() const {
  std::size_t count = 0;
  std::size_t in = backbone_.input_dim;
  const std::size_t bn = backbone_.use_batchnorm ? 2 : 0;
  for (std::size_t width : backbone_.hidden_dims) {
    count += in * width + width + bn * width;
    in = width;
  }
  count += in * backbone_.embed_dim + backbone_.embed_dim + bn * backbone_.embed_dim;
  count += backbone_.embed_dim * backbone_.num_classes + backbone_.num_classes;
  const std::size_t h = head_.scalar_uncertainty ? 1 : head_.delta;
  count += head_.embed_dim * h + h + 2 * h;
  return count;
}

void Network::CheckParams(const ModelParams& params) const {
  const Layout layout = ExpectedLayout(backbone_, head_);
  auto check = [](const TensorMap& map,
                  const std::vector<std::pair<std::string, Shape>>& expected,
                  const char* kind) {
    if (map.size() != expected.size()) {
      throw ShapeError(std::string("expected ") +
                       std::to_string(expected.size()) + " " + kind +
                       " tensors, found " + std::to_string(map.size()));
    }
    for (const auto& [name, shape] : expected) {
      const Tensor& t = Find(map, name);
      if (t.shape() != shape) {
        throw ShapeError("tensor '" + name + "' has shape " +
                         ShapeToString(t.shape()) + ", expected " +
                         ShapeToString(shape));
      }
    }
  };
  check(params.trainable, layout.trainable, "trainable");
  check(params.buffers, layout.buffers, "buffer");
}

Var Network::Linear(const ParamVars& vars, const std::string& name,
                    const Var& h) const {
  return Add(MatMul(h, FindVar(vars, name + ".weight")),
             FindVar(vars, name + ".bias"));
}

BackboneOutput Network::Backbone(const ModelParams& params,
                                 const ParamVars& vars, const Var& x, Mode mode,
                                 RngStream* dropout_rng) const {
  if (x->shape().size() != 2 || x->shape()[1] != backbone_.input_dim) {
    throw ShapeError("backbone expects B x " +
                     std::to_string(backbone_.input_dim) + " input, got " +
                     ShapeToString(x->shape()));
  }
  const bool dropout = mode == Mode::kTrain && backbone_.dropout_rate > 0.0;
  if (dropout && dropout_rng == nullptr) {
    throw Error("train-mode forward with dropout needs an rng stream");
  }
  BackboneOutput out;
  auto normalize = [&](const Var& z, const std::string& prefix) {
    if (!backbone_.use_batchnorm) return z;
    BatchNormResult bn = BatchNorm(
        z, FindVar(vars, prefix + ".weight"), FindVar(vars, prefix + ".bias"),
        Find(params.buffers, prefix + ".running_mean"),
        Find(params.buffers, prefix + ".running_var"), mode,
        kBackboneBnMomentum, kBackboneBnEpsilon, prefix);
    out.updated_buffers.merge(bn.updated_buffers);
    return bn.output;
  };
  Var h = x;
  for (std::size_t i = 0; i < backbone_.hidden_dims.size(); ++i) {
    h = Relu(normalize(Linear(vars, LayerName(i), h), LayerName(i) + ".bn"));
    if (dropout) h = Dropout(h, backbone_.dropout_rate, *dropout_rng);
  }
  out.embedding = Relu(normalize(Linear(vars, "embed", h), "embed.bn"));
  out.logits = Linear(vars, "classifier", out.embedding);
  return out;
}

HeadOutput Network::Uncertainty(const ModelParams& params,
                                const ParamVars& vars, const Var& embedding,
                                Mode mode) const {
  if (embedding->shape().size() != 2 ||
      embedding->shape()[1] != head_.embed_dim) {
    throw ShapeError("uncertainty head expects B x " +
                     std::to_string(head_.embed_dim) + " embedding, got " +
                     ShapeToString(embedding->shape()));
  }
  HeadOutput out;
  BatchNormResult bn = BatchNorm(
      Linear(vars, "head", embedding), FindVar(vars, "head.bn.weight"),
      FindVar(vars, "head.bn.bias"), Find(params.buffers, "head.bn.running_mean"),
      Find(params.buffers, "head.bn.running_var"), mode, head_.bn_momentum,
      head_.bn_epsilon, "head.bn");
  out.updated_buffers = std::move(bn.updated_buffers);
  out.pre_activation = bn.output;
  Var u = Exp(bn.output);
  if (head_.scalar_uncertainty) {
    u = Mul(u, Constant(Tensor::Ones({head_.delta})));
  }
  for (double v : u->value().values()) {
    if (!(v > 0.0)) throw NumericError("uncertainty underflowed to zero");
  }
  out.uncertainty = u;
  return out;
}

ForwardOutput Network::Predict(const ModelParams& params, const Tensor& x) const {
  const ParamVars vars = BindParams(params);
  const BackboneOutput b = Backbone(params, vars, Constant(x), Mode::kEval, nullptr);
  const HeadOutput h = Uncertainty(params, vars, b.embedding, Mode::kEval);
  return {b.logits->value(), b.embedding->value(), h.uncertainty->value()};
}

void CommitBuffers(ModelParams& params, const TensorMap& updates) {
  for (const auto& [name, tensor] : updates) {
    const auto it = params.buffers.find(name);
    if (it == params.buffers.end()) {
      throw ShapeError("update for unknown buffer '" + name + "'");
    }
    if (it->second.shape() != tensor.shape()) {
      throw ShapeError("buffer '" + name + "' update has wrong shape");
    }
    const std::string suffix = ".running_var";
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      for (double v : tensor.values()) {
        if (!(v > 0.0)) throw NumericError("running variance of '" + name + "' collapsed to zero");
      }
    }
    it->second = tensor;
  }
}

}  // namespace uenl
