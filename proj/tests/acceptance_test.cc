// Acceptance checks. Prints one PASS, FAIL or SKIP line per criterion.
//
// Usage: acceptance_test [--report] [--config path]
//   --report  exit 0 whenever every criterion ran to a verdict, even FAIL
//   --config  desk experiment config (default: configs/desk_default.json)
// Criterion 10 runs only when UENL_MNIST_DIR and UENL_FASHION_MNIST_DIR name
// directories holding the uncompressed IDX files.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "uenl/autodiff.h"
#include "uenl/checkpoint.h"
#include "uenl/config.h"
#include "uenl/evaluate.h"
#include "uenl/gradcheck.h"
#include "uenl/loss.h"
#include "uenl/metrics.h"
#include "uenl/model.h"
#include "uenl/rng.h"
#include "uenl/scoring.h"
#include "uenl/sweep.h"
#include "uenl/train.h"

#ifndef UENL_SOURCE_DIR
#define UENL_SOURCE_DIR "."
#endif

namespace uenl {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kPass;
  std::string detail;
};

// Collects failed checks; the criterion passes when none failed.
class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ = failed_ || !ok;
  }
  Outcome Finish(const std::string& summary) const {
    if (!failed_) return {Status::kPass, summary};
    std::string detail = summary;
    for (const std::string& f : failures_) detail += "; " + f;
    return {Status::kFail, detail};
  }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
};

std::string Fmt(double v, int precision = 4) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// --- Criterion 1: gradients.

constexpr double kStep = 1e-6;

Var Project(const Var& v, RngStream& rng) {
  return Sum(Mul(v, Constant(SampleUniform(rng, v->shape(), -1, 1))));
}

struct PrimitiveCase {
  const char* name;
  std::function<Var(const Var&, RngStream&)> build;
  Shape shape;
  double lo;
  double hi;
};

Var RandomConstant(RngStream& rng, Shape shape, double lo, double hi) {
  return Constant(SampleUniform(rng, std::move(shape), lo, hi));
}

std::vector<PrimitiveCase> PrimitiveCases() {
  return {
      {"matmul_left", [](const Var& x, RngStream& r) { return MatMul(x, RandomConstant(r, {4, 2}, -1, 1)); }, {3, 4}, -1, 1},
      {"matmul_right", [](const Var& x, RngStream& r) { return MatMul(RandomConstant(r, {3, 4}, -1, 1), x); }, {4, 2}, -1, 1},
      {"add", [](const Var& x, RngStream& r) { return Add(RandomConstant(r, {3, 4}, -1, 1), x); }, {4}, -1, 1},
      {"sub", [](const Var& x, RngStream& r) { return Sub(RandomConstant(r, {3, 4}, -1, 1), x); }, {3, 4}, -1, 1},
      {"mul", [](const Var& x, RngStream& r) { return Mul(x, RandomConstant(r, {3, 1}, -2, 2)); }, {3, 4}, -1, 1},
      {"div_numerator", [](const Var& x, RngStream& r) { return Div(x, RandomConstant(r, {3, 1}, 0.5, 2)); }, {3, 4}, -1, 1},
      {"div_denominator", [](const Var& x, RngStream& r) { return Div(RandomConstant(r, {3, 4}, -1, 1), x); }, {3, 1}, 0.5, 2},
      {"scale", [](const Var& x, RngStream&) { return Scale(x, -2.5); }, {5}, -1, 1},
      {"relu", [](const Var& x, RngStream&) { return Relu(x); }, {8}, -1, 1},
      {"exp", [](const Var& x, RngStream&) { return Exp(x); }, {6}, -2, 2},
      {"ln", [](const Var& x, RngStream&) { return Ln(x); }, {6}, 0.2, 3},
      {"square", [](const Var& x, RngStream&) { return Square(x); }, {6}, -2, 2},
      {"sum", [](const Var& x, RngStream&) { return Sum(x, 0); }, {3, 4}, -1, 1},
      {"mean", [](const Var& x, RngStream&) { return Mean(x, 1); }, {3, 4}, -1, 1},
      {"max", [](const Var& x, RngStream&) { return Max(x, 1); }, {3, 4}, -1, 1},
      {"l2norm", [](const Var& x, RngStream&) { return L2Norm(x, 1); }, {3, 4}, -1, 1},
      {"logsumexp", [](const Var& x, RngStream&) { return LogSumExp(x, 0); }, {3, 4}, -3, 3},
      {"concat", [](const Var& x, RngStream& r) { return Concat(RandomConstant(r, {3, 2}, -1, 1), x, 1); }, {3, 4}, -1, 1},
      {"reshape", [](const Var& x, RngStream&) { return Reshape(x, {2, 6}); }, {3, 4}, -1, 1},
  };
}

std::vector<int> RandomLabels(RngStream& rng, std::size_t n, std::size_t k) {
  std::vector<int> labels(n);
  for (int& y : labels) y = static_cast<int>(rng.UniformInt(k));
  return labels;
}

// Full UE-NL loss through a small network with dropout, batch norm and the
// resampling noise frozen; checks every parameter and the input.
double FullLossGradientError(std::uint64_t instance) {
  RngStream rng(instance, "full-loss");
  BackboneConfig b;
  b.input_dim = 4;
  b.hidden_dims = {6};
  b.embed_dim = 5;
  b.num_classes = 3;
  b.dropout_rate = 0.3;
  UncertaintyHeadConfig h;
  h.embed_dim = 5;
  h.delta = 8;
  const Network net(b, h);
  ModelParams params = net.InitParams(rng.Fork("init"));
  RngStream head_rng = rng.Fork("head");
  params.trainable.at("head.weight") = SampleUniform(head_rng, {5, 8}, -0.3, 0.3);
  RngStream data_rng = rng.Fork("data");
  const Tensor x = SampleUniform(data_rng, {10, 4}, -1, 1);
  const std::vector<int> y = RandomLabels(data_rng, 10, 3);
  RngStream noise_rng = rng.Fork("resample");
  const Tensor noise = SampleStandardNormal(noise_rng, {10, 8});
  const RngStream dropout_seed = rng.Fork("dropout");
  UenlOptions options;
  options.lambda = data_rng.Uniform(0.0, 1.0);

  auto loss = [&](const ParamVars& vars, const Var& input) {
    RngStream dropout = dropout_seed;
    const BackboneOutput out = net.Backbone(params, vars, input, Mode::kTrain, &dropout);
    const HeadOutput u = net.Uncertainty(params, vars, out.embedding, Mode::kTrain);
    return UenlTotal(out.logits, u.uncertainty, y, options, noise).total;
  };
  double worst = 0.0;
  for (const auto& [name, value] : params.trainable) {
    const GradCheckResult r = FiniteDiffCheck(
        [&, name = name](const Var& v) {
          ParamVars vars = BindParams(params);
          vars.at(name) = v;
          return loss(vars, Constant(x));
        },
        value, kStep);
    worst = std::max(worst, r.max_relative_error);
  }
  const GradCheckResult rx =
      FiniteDiffCheck([&](const Var& v) { return loss(BindParams(params), v); }, x, kStep);
  return std::max(worst, rx.max_relative_error);
}

Outcome GradientCorrectness() {
  const Clock::time_point start = Clock::now();
  Checker check;
  double worst_primitive = 0.0;
  for (const PrimitiveCase& c : PrimitiveCases()) {
    RngStream rng(2024, c.name);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Tensor point = SampleUniform(rng, c.shape, c.lo, c.hi);
      const RngStream frozen = rng.Fork("weights" + std::to_string(trial));
      const GradCheckResult r = FiniteDiffCheck(
          [&](const Var& x) {
            RngStream local = frozen;
            return Project(c.build(x, local), local);
          },
          point, kStep);
      worst = std::max(worst, r.max_relative_error);
    }
    check.Expect(worst < 1e-5, std::string(c.name) + " rel err " + Fmt(worst));
    worst_primitive = std::max(worst_primitive, worst);
  }
  double worst_loss = 0.0;
  for (std::uint64_t instance = 0; instance < 100; ++instance) {
    worst_loss = std::max(worst_loss, FullLossGradientError(instance));
  }
  check.Expect(worst_loss < 1e-5, "full loss rel err " + Fmt(worst_loss));
  const double seconds = Seconds(start);
  check.Expect(seconds < 60.0, "runtime " + Fmt(seconds) + " s");
  return check.Finish("max rel err primitives " + Fmt(worst_primitive, 3) + ", full loss " +
                      Fmt(worst_loss, 3) + " over 100 instances each, " + Fmt(seconds, 3) +
                      " s");
}

// --- Criterion 2: scale invariance and the LogitNorm identity.

Outcome ScaleInvariance() {
  Checker check;
  double worst = 0.0;
  bool identity = true;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng(seed, "scale-invariance");
    const Tensor p = SampleUniform(rng, {8, 5}, -3, 3);
    const Var u = Constant(SampleUniform(rng, {8, 32}, 0.2, 3.0));
    const std::vector<int> y = RandomLabels(rng, 8, 5);
    const UenlOptions options;
    const RngStream noise = rng.Fork("resample");
    RngStream base_rng = noise;
    const double base = UenlTotal(Constant(p), u, y, options, base_rng).total_value();
    for (double c : {0.1, 10.0, 1000.0}) {
      std::vector<double> scaled(p.values());
      for (double& v : scaled) v *= c;
      RngStream r = noise;
      const double got =
          UenlTotal(Constant(Tensor(p.shape(), scaled)), u, y, options, r).total_value();
      worst = std::max(worst, std::abs(got - base));
    }
    const double a = LogitNormCe(Constant(p), y, 0.04)->value().item();
    const double b =
        CeWithTemperature(NormalizeLogits(Constant(p)), Constant(Tensor::Full({8}, 0.04)), y)
            ->value()
            .item();
    identity = identity && a == b;
  }
  check.Expect(worst <= 1e-9, "max |diff| " + Fmt(worst));
  check.Expect(identity, "logitnorm_ce differs from ce_with_temperature(normalize(p), T)");
  return check.Finish("max |total(c p) - total(p)| = " + Fmt(worst, 3) +
                      " for c in {0.1, 10, 1000}; LogitNorm identity exact");
}

// --- Criterion 3: KL oracle.

double MonteCarloKl(double variance, std::size_t n, std::uint64_t seed) {
  // E_q[log q(z) - log p(z)] with q = N(0, u) and p = N(0, 1).
  RngStream rng(seed, "kl-oracle");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = std::sqrt(variance) * rng.StandardNormal();
    acc += -0.5 * std::log(variance) - z * z / (2.0 * variance) + z * z / 2.0;
  }
  return acc / static_cast<double>(n);
}

Outcome KlOracle() {
  Checker check;
  std::string summary;
  for (double u : {0.5, 1.0, 2.0}) {
    const double closed = KlRegularizer(Constant(Tensor::Matrix({{u}})))->value().item();
    const double mc = MonteCarloKl(u, 1000000, 7);
    check.Expect(std::abs(closed - mc) <= 1e-2, "u=" + Fmt(u) + " closed " + Fmt(closed) +
                                                    " mc " + Fmt(mc));
    summary += "u=" + Fmt(u) + ": " + Fmt(closed, 6) + " vs " + Fmt(mc, 6) + "; ";
  }
  const double at_one = KlRegularizer(Constant(Tensor::Matrix({{1.0}})))->value().item();
  check.Expect(at_one == 0.0, "kl(1) = " + Fmt(at_one, 17));
  return check.Finish(summary + "kl(1) = " + Fmt(at_one));
}

// --- Criterion 4: resampling oracle.

Outcome ResamplingOracle() {
  Checker check;
  constexpr std::size_t kDraws = 100000;
  constexpr std::size_t kDelta = 32;
  RngStream u_rng(5, "resampling-u");
  const Tensor u_row = SampleUniform(u_rng, {1, kDelta}, 0.2, 3.0);
  double sum_u = 0.0;
  for (double v : u_row.values()) sum_u += v;
  std::vector<double> tiled;
  tiled.reserve(kDraws * kDelta);
  for (std::size_t i = 0; i < kDraws; ++i) {
    tiled.insert(tiled.end(), u_row.values().begin(), u_row.values().end());
  }
  RngStream rng(6, "resample");
  const Resampled r = ResampleUncertainty(Constant(Tensor({kDraws, kDelta}, tiled)), rng);
  double mean = 0.0;
  for (double v : r.u_hat->value().values()) mean += v;
  mean /= static_cast<double>(kDraws);
  const double mean_err = std::abs(mean - sum_u) / sum_u;
  check.Expect(mean_err <= 0.02, "mean " + Fmt(mean) + " vs sum u " + Fmt(sum_u));

  RngStream chi_rng(7, "resample");
  const Resampled chi =
      ResampleUncertainty(Constant(Tensor::Ones({kDraws, kDelta})), chi_rng);
  double m = 0.0;
  for (double v : chi.u_hat->value().values()) m += v;
  m /= static_cast<double>(kDraws);
  double var = 0.0;
  for (double v : chi.u_hat->value().values()) var += (v - m) * (v - m);
  var /= static_cast<double>(kDraws - 1);
  const double delta = static_cast<double>(kDelta);
  check.Expect(std::abs(m - delta) <= 0.05 * delta, "chi-square mean " + Fmt(m));
  check.Expect(std::abs(var - 2 * delta) <= 0.05 * 2 * delta, "chi-square variance " + Fmt(var));
  return check.Finish("mean u_hat " + Fmt(mean, 6) + " vs sum u " + Fmt(sum_u, 6) +
                      "; u=1: mean " + Fmt(m, 5) + " (32), variance " + Fmt(var, 5) + " (64)");
}

// --- Criterion 5: metric oracles.

struct Instance {
  std::vector<double> id;
  std::vector<double> ood;
};

Instance RandomInstance(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> size(1, 200);
  std::uniform_int_distribution<int> grid(0, 9);
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool ties = std::bernoulli_distribution(0.5)(gen);
  Instance inst;
  inst.id.resize(static_cast<std::size_t>(size(gen)));
  inst.ood.resize(static_cast<std::size_t>(size(gen)));
  for (double& v : inst.id) v = ties ? grid(gen) + 1.0 : normal(gen) + 0.7;
  for (double& v : inst.ood) v = ties ? grid(gen) : normal(gen);
  return inst;
}

double PairwiseAuroc(const Instance& inst) {
  double total = 0.0;
  for (double i : inst.id) {
    for (double o : inst.ood) total += i > o ? 1.0 : (i == o ? 0.5 : 0.0);
  }
  return total / (static_cast<double>(inst.id.size()) * static_cast<double>(inst.ood.size()));
}

std::size_t CountAtOrAbove(const std::vector<double>& v, double t) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [t](double s) { return s >= t; }));
}

std::vector<double> DistinctDescending(const Instance& inst) {
  std::set<double, std::greater<>> all(inst.id.begin(), inst.id.end());
  all.insert(inst.ood.begin(), inst.ood.end());
  return {all.begin(), all.end()};
}

// Average precision with ID as the positive class, one step per distinct
// threshold.
double EnumeratedAupr(const Instance& inst) {
  double area = 0.0;
  double previous_recall = 0.0;
  for (double t : DistinctDescending(inst)) {
    const std::size_t tp = CountAtOrAbove(inst.id, t);
    const std::size_t fp = CountAtOrAbove(inst.ood, t);
    const double recall = static_cast<double>(tp) / static_cast<double>(inst.id.size());
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - previous_recall) * precision;
    previous_recall = recall;
  }
  return area;
}

// FPR at the largest threshold whose TPR reaches 95%.
double EnumeratedFpr(const Instance& inst) {
  for (double t : DistinctDescending(inst)) {
    if (20 * CountAtOrAbove(inst.id, t) >= 19 * inst.id.size()) {
      return static_cast<double>(CountAtOrAbove(inst.ood, t)) /
             static_cast<double>(inst.ood.size());
    }
  }
  return std::nan("");
}

Outcome MetricOracles() {
  Checker check;
  std::mt19937_64 gen(2025);
  std::size_t mismatches = 0;
  double worst_transform = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Instance inst = RandomInstance(gen);
    const double auroc = Auroc(inst.id, inst.ood);
    const double aupr = Aupr(inst.id, inst.ood);
    const double fpr = FprAt95Tpr(inst.id, inst.ood).fpr;
    if (auroc != PairwiseAuroc(inst) || aupr != EnumeratedAupr(inst) ||
        fpr != EnumeratedFpr(inst)) {
      ++mismatches;
    }
    Instance moved = inst;
    auto f = [](double s) { return std::exp(s / 4.0) * 3.0 - 7.0; };
    std::transform(moved.id.begin(), moved.id.end(), moved.id.begin(), f);
    std::transform(moved.ood.begin(), moved.ood.end(), moved.ood.begin(), f);
    worst_transform = std::max(worst_transform, std::abs(Auroc(moved.id, moved.ood) - auroc));
    worst_transform =
        std::max(worst_transform, std::abs(FprAt95Tpr(moved.id, moved.ood).fpr - fpr));
  }
  check.Expect(mismatches == 0, std::to_string(mismatches) + " oracle mismatches");
  check.Expect(worst_transform <= 1e-12, "transform diff " + Fmt(worst_transform));
  return check.Finish("1000 instances, " + std::to_string(mismatches) +
                      " oracle mismatches, max monotone-transform diff " +
                      Fmt(worst_transform, 3));
}

// --- Criterion 6: method reductions.

ExperimentConfig SmallTrainingConfig() {
  ExperimentConfig config;
  config.seed = 17;
  config.hidden_dims = {16};
  config.embed_dim = 8;
  config.epochs = 5;
  config.batch_size = 32;
  config.lr_drop_epochs = {3};
  config.data.seed = 4;
  config.data.dim = 6;
  config.data.train_per_class = 100;
  config.data.test_per_class = 20;
  return config;
}

Outcome MethodReductions() {
  Checker check;
  BackboneConfig b;
  b.input_dim = 6;
  b.hidden_dims = {16};
  b.embed_dim = 8;
  b.num_classes = 4;
  UncertaintyHeadConfig h;
  h.embed_dim = 8;
  const Network net(b, h);
  const ModelParams params = net.InitParams(RngStream(3, "init"));
  RngStream rng(4, "inputs");
  const Tensor x = SampleUniform(rng, {100, 6}, -2, 2);
  OdinOptions odin;
  odin.temperature = 1.0;
  odin.epsilon = 0.0;
  const std::vector<double> odin_scores = OdinScores(net, params, x, odin);
  const std::vector<double> msp_scores = MspScores(net.Predict(params, x).logits);
  check.Expect(odin_scores == msp_scores, "odin(T=1, eps=0) differs from msp");

  ExperimentConfig logitnorm = SmallTrainingConfig();
  logitnorm.method = Method::kLogitNorm;
  ExperimentConfig pinned = SmallTrainingConfig();
  pinned.pinned_temperature = pinned.temperature;
  pinned.lambda = 0.0;
  const PreparedData data = PrepareData(logitnorm.data);
  const std::vector<double> a = Train(logitnorm, data).loss_trace;
  const std::vector<double> c = Train(pinned, data).loss_trace;
  check.Expect(!a.empty() && a == c, "pinned UE-NL trace differs from LogitNorm");
  return check.Finish("odin == msp on 100 inputs; pinned UE-NL trace equals LogitNorm over " +
                      std::to_string(a.size()) + " steps");
}

// --- Criterion 7: desk experiment.

struct DeskRun {
  ExperimentConfig config;
  PreparedData data;
  Checkpoint checkpoint;
  EvalReport report;
  double seconds = 0.0;
};

double MeanOf(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

Outcome DeskExperiment(const DeskRun& run) {
  Checker check;
  const std::vector<std::string> far = {"uniform", "gaussian_noise"};
  std::string summary;
  for (const std::string& name : far) {
    const auto row = std::find_if(run.report.metrics.begin(), run.report.metrics.end(),
                                  [&](const MetricRow& r) {
                                    return r.method == "uncertainty" && r.ood_dataset == name;
                                  });
    if (row == run.report.metrics.end()) {
      check.Expect(false, "no uncertainty row for " + name);
      continue;
    }
    check.Expect(row->auroc >= 0.95, name + " AUROC " + Fmt(row->auroc) + " < 0.95");
    check.Expect(row->fpr95 <= 0.20, name + " FPR95 " + Fmt(row->fpr95) + " > 0.20");
    summary += name + " AUROC " + Fmt(row->auroc) + " FPR95 " + Fmt(row->fpr95) + "; ";
  }
  const double acc = run.report.accuracy.at(0).acc;
  check.Expect(acc >= 0.97, "accuracy " + Fmt(acc) + " < 0.97");
  check.Expect(run.seconds < 300.0, "runtime " + Fmt(run.seconds) + " s");

  // Mean uncertainty sum_i u_i is the negated uncertainty score.
  const auto set = std::find_if(run.report.scores.begin(), run.report.scores.end(),
                                [](const ScoreSet& s) { return s.method == "uncertainty"; });
  if (set == run.report.scores.end()) {
    check.Expect(false, "no uncertainty scores");
  } else {
    const double id_mean = -MeanOf(set->id_scores);
    summary += "mean sum u: id " + Fmt(id_mean);
    for (const std::string& name : far) {
      const double ood_mean = -MeanOf(set->ood_scores.at(name));
      check.Expect(ood_mean > id_mean, "mean u " + name + " " + Fmt(ood_mean) + " <= id " +
                                           Fmt(id_mean));
      summary += ", " + name + " " + Fmt(ood_mean);
    }
  }
  return check.Finish(summary + "; acc " + Fmt(acc) + "; " + Fmt(run.seconds, 3) + " s");
}

// --- Criterion 8: ablation sweeps.

Outcome AblationSweeps(const nlohmann::ordered_json& base) {
  Checker check;
  const ExperimentConfig defaults;
  check.Expect(defaults.delta == 32, "default delta " + std::to_string(defaults.delta));
  check.Expect(defaults.lambda == 0.1, "default lambda " + Fmt(defaults.lambda));
  const std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string summary;
  for (const char* axis_text : {"delta=16,32,64", "lambda=0.01,0.1,1.0"}) {
    const std::vector<SweepAxis> grid = {ParseSweepAxis(axis_text)};
    const std::vector<SweepRow> rows = RunSweep(base, grid, jobs);
    std::ostringstream csv;
    WriteSweepCsv(csv, grid, rows);
    std::istringstream lines(csv.str());
    std::string line;
    std::size_t data_lines = 0;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
      ++data_lines;
      std::size_t fields = 1;
      bool empty_field = line.empty() || line.back() == ',';
      for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == ',') {
          ++fields;
          empty_field = empty_field || (i + 1 < line.size() && line[i + 1] == ',');
        }
      }
      check.Expect(fields == 8 && !empty_field, std::string(axis_text) + " row '" + line + "'");
    }
    check.Expect(data_lines == 3, std::string(axis_text) + " has " +
                                      std::to_string(data_lines) + " rows");
    for (const SweepRow& r : rows) {
      check.Expect(std::isfinite(r.fpr95) && std::isfinite(r.auroc) && std::isfinite(r.aupr) &&
                       std::isfinite(r.acc),
                   std::string(axis_text) + " non-finite metric");
    }
    summary += std::string(axis_text) + ": " + std::to_string(data_lines) + " rows; ";
  }
  return check.Finish(summary + "defaults delta=32 lambda=0.1");
}

// --- Criterion 9: determinism.

std::string ReportText(const EvalReport& report) {
  std::ostringstream out;
  WriteMetricsCsv(out, report.metrics);
  WriteAccuracyCsv(out, report.accuracy);
  WriteHistogramCsv(out, report.histograms);
  WriteScoresCsv(out, report.scores, report.id_name);
  return out.str();
}

Outcome Determinism(const DeskRun& run) {
  Checker check;
  const Checkpoint again = Train(run.config, PrepareData(run.config.data));
  const std::string first = SerializeCheckpoint(run.checkpoint);
  check.Expect(SerializeCheckpoint(again) == first, "checkpoints differ between runs");
  const EvalReport report_again =
      Evaluate(again, run.data.test, run.data.ood, run.config.score_methods);
  const std::string report_text = ReportText(run.report);
  check.Expect(ReportText(report_again) == report_text, "reports differ between runs");

  const fs::path path = fs::temp_directory_path() / "uenl_acceptance.ckpt.json";
  SaveCheckpoint(path, run.checkpoint);
  const Checkpoint loaded = LoadCheckpoint(path);
  fs::remove(path);
  const EvalReport reloaded =
      Evaluate(loaded, run.data.test, run.data.ood, run.config.score_methods);
  check.Expect(ReportText(reloaded) == report_text, "reloaded evaluation differs");
  return check.Finish("checkpoint " + std::to_string(first.size()) +
                      " bytes identical across runs; reports identical; round-trip "
                      "evaluation identical");
}

// --- Criterion 10: MNIST against FashionMNIST.

Outcome Mnist() {
  const char* mnist = std::getenv("UENL_MNIST_DIR");
  const char* fashion = std::getenv("UENL_FASHION_MNIST_DIR");
  if (mnist == nullptr || fashion == nullptr) {
    return {Status::kSkip, "set UENL_MNIST_DIR and UENL_FASHION_MNIST_DIR to run"};
  }
  const Clock::time_point start = Clock::now();
  Checker check;
  ExperimentConfig config;
  config.seed = 1;
  config.hidden_dims = {256};
  config.embed_dim = 128;
  config.epochs = 5;
  config.lr_drop_epochs = {};
  config.score_methods = {ScoreMethod::kUncertainty};
  config.data.source = "idx";
  const fs::path m(mnist);
  config.data.train_path = (m / "train-images-idx3-ubyte").string();
  config.data.train_labels_path = (m / "train-labels-idx1-ubyte").string();
  config.data.test_path = (m / "t10k-images-idx3-ubyte").string();
  config.data.test_labels_path = (m / "t10k-labels-idx1-ubyte").string();
  OodSpec ood;
  ood.kind = "idx";
  ood.name = "fashion_mnist";
  ood.path = (fs::path(fashion) / "t10k-images-idx3-ubyte").string();
  config.data.ood = {ood};
  const PreparedData data = PrepareData(config.data);
  const Checkpoint ckpt = Train(config, data);
  const EvalReport report = Evaluate(ckpt, data.test, data.ood, config.score_methods);
  const double auroc = report.metrics.at(0).auroc;
  const double acc = report.accuracy.at(0).acc;
  const double seconds = Seconds(start);
  check.Expect(auroc >= 0.85, "AUROC " + Fmt(auroc) + " < 0.85");
  check.Expect(acc >= 0.96, "accuracy " + Fmt(acc) + " < 0.96");
  check.Expect(seconds < 1800.0, "runtime " + Fmt(seconds) + " s");
  return check.Finish("uncertainty AUROC " + Fmt(auroc) + ", accuracy " + Fmt(acc) + ", " +
                      Fmt(seconds, 4) + " s");
}

}  // namespace
}  // namespace uenl

int main(int argc, char** argv) {
  using namespace uenl;
  bool report_only = false;
  std::string config_path = std::string(UENL_SOURCE_DIR) + "/configs/desk_default.json";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--report") {
      report_only = true;
    } else if (arg == "--config" && i + 1 < argc) {
      config_path = argv[++i];
    } else {
      std::cerr << "usage: acceptance_test [--report] [--config path]\n";
      return 2;
    }
  }

  std::optional<DeskRun> desk;
  std::string desk_error;
  auto desk_run = [&]() -> const DeskRun& {
    if (!desk) {
      DeskRun run;
      const Clock::time_point start = Clock::now();
      run.config = LoadConfig(config_path);
      run.data = PrepareData(run.config.data);
      run.checkpoint = Train(run.config, run.data);
      run.report = Evaluate(run.checkpoint, run.data.test, run.data.ood, run.config.score_methods);
      run.seconds = Seconds(start);
      desk = std::move(run);
    }
    return *desk;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", GradientCorrectness},
      {"scale invariance", ScaleInvariance},
      {"KL oracle", KlOracle},
      {"resampling oracle", ResamplingOracle},
      {"metric oracles", MetricOracles},
      {"method reductions", MethodReductions},
      {"desk OOD experiment", [&] { return DeskExperiment(desk_run()); }},
      {"ablation sweeps", [&] { return AblationSweeps(ConfigToJson(LoadConfig(config_path))); }},
      {"determinism", [&] { return Determinism(desk_run()); }},
      {"MNIST vs FashionMNIST", Mnist},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {Status::kFail, std::string("error: ") + e.what()};
    }
    const char* label = outcome.status == Status::kPass   ? "PASS"
                        : outcome.status == Status::kFail ? "FAIL"
                                                          : "SKIP";
    if (outcome.status == Status::kFail) ++failures;
    std::cout << label << " " << (i + 1) << " " << criteria[i].first << ": " << outcome.detail
              << std::endl;
  }
  std::cout << failures << " of " << criteria.size() << " criteria failed" << std::endl;
  return failures > 0 && !report_only ? 1 : 0;
}
