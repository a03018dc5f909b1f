// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include "respnet/error.hpp"
#include "respnet/io.hpp"

namespace respnet {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw InvalidConfig("train.learning_rate must be nonnegative");
  if (!(l2_lambda >= 0.0)) throw InvalidConfig("train.l2_lambda must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidConfig("Adam moment decay rates must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidConfig("Adam epsilon must be positive");
  if (eval_every == 0) throw InvalidConfig("train.eval_every must be positive");
}

std::size_t TrainConfig::effective_batch_size(std::size_t num_classes) const {
  return batch_size == 0 ? 4 * num_classes : batch_size;
}

Tensor kl_divergence(Graph& g, const Tensor& labels, const Tensor& predictions) {
  if (labels.dims() != predictions.dims() || labels.rank() != 2) {
    throw InvalidInput("kl_divergence: labels " + shape_string(labels.dims()) + " and predictions " +
                       shape_string(predictions.dims()) + " must be matching N x C matrices");
  }
  auto y = labels.data();
  auto p = predictions.data();
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] >= 0.0)) throw InvalidInput("kl_divergence: label entries must be nonnegative");
    if (y[i] == 0.0) continue;
    total += y[i] * std::log(y[i] / std::max(p[i], kProbabilityFloor));
  }
  Tensor out(Shape{1}, total);
  if (g.tracks({&predictions})) {
    g.record("kl_divergence", {labels, predictions}, out, [labels, predictions, out]() {
      const double go = out.grad()[0];
      auto yv = labels.data();
      auto pv = predictions.data();
      auto gp = predictions.grad();
      for (std::size_t i = 0; i < yv.size(); ++i) {
        if (yv[i] == 0.0 || pv[i] < kProbabilityFloor) continue;
        gp[i] -= go * yv[i] / pv[i];
      }
    });
  }
  return out;
}

Tensor l2_penalty(Graph& g, std::span<const Tensor> params, double lambda) {
  double squares = 0.0;
  for (const Tensor& t : params) {
    for (double v : t.data()) squares += v * v;
  }
  Tensor out(Shape{1}, 0.5 * lambda * squares);
  if (lambda != 0.0 && g.tracks(params)) {
    std::vector<Tensor> inputs(params.begin(), params.end());
    g.record("l2_penalty", inputs, out, [inputs, lambda, out]() {
      const double go = out.grad()[0];
      for (const Tensor& t : inputs) {
        if (!t.requires_grad()) continue;
        auto v = t.data();
        auto gt = t.grad();
        for (std::size_t i = 0; i < v.size(); ++i) gt[i] += go * (lambda * v[i]);
      }
    });
  }
  return out;
}

Tensor kl_loss(Graph& g, const Tensor& labels, const Tensor& predictions, std::span<const Tensor> params,
               double lambda) {
  if (!(lambda >= 0.0)) throw InvalidInput("kl_loss: lambda must be nonnegative");
  return ops::add(g, kl_divergence(g, labels, predictions), l2_penalty(g, params, lambda));
}

Adam::Adam(const Model& model, const TrainConfig& config)
    : lr_(config.learning_rate), beta1_(config.beta1), beta2_(config.beta2), eps_(config.epsilon) {
  config.validate();
  for (const NamedTensor& t : model.tensors()) {
    if (t.kind == ParamKind::Buffer) continue;
    state_.slots.push_back({t.name, std::vector<double>(t.tensor.size(), 0.0), std::vector<double>(t.tensor.size(), 0.0)});
  }
}

void Adam::load_state(const Model& model, OptimizerState state) {
  std::size_t k = 0;
  for (const NamedTensor& t : model.tensors()) {
    if (t.kind == ParamKind::Buffer) continue;
    if (k >= state.slots.size()) throw DataError("optimizer state has no entry for '" + t.name + "'");
    const AdamSlot& s = state.slots[k++];
    if (s.name != t.name) throw DataError("optimizer state entry '" + s.name + "' does not match '" + t.name + "'");
    if (s.m.size() != t.tensor.size() || s.v.size() != t.tensor.size()) {
      throw DataError("optimizer state for '" + t.name + "' has the wrong size");
    }
  }
  if (k != state.slots.size()) throw DataError("optimizer state has entries for unknown parameters");
  state_ = std::move(state);
}

void Adam::step(Model& model) {
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  std::size_t k = 0;
  for (NamedTensor& nt : model.tensors()) {
    if (nt.kind == ParamKind::Buffer) continue;
    AdamSlot& s = state_.slots.at(k++);
    auto p = nt.tensor.data();
    auto g = nt.tensor.grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g[i];
      s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = s.m[i] / c1;
      const double v_hat = s.v[i] / c2;
      p[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
  model.round_to_storage_precision();
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

[[noreturn]] void non_finite(const std::string& what, const std::string& tensor) {
  throw NumericError(what + "; first non-finite tensor: " + tensor);
}

}  // namespace

double train_step(Model& model, Adam& optimizer, const Batch& batch, const TrainConfig& config,
                  std::mt19937_64& rng) {
  model.zero_grad();
  Graph g;
  ForwardContext ctx{true, &rng, nullptr};
  const Tensor probs = model.forward(g, batch.inputs, ctx);
  const std::vector<Tensor> reg = model.regularized();
  const Tensor loss = kl_loss(g, batch.labels, probs, reg, config.l2_lambda);
  const double value = loss.item();
  if (!std::isfinite(value)) {
    if (!all_finite(batch.inputs.data())) non_finite("non-finite loss", "batch inputs");
    if (!all_finite(batch.labels.data())) non_finite("non-finite loss", "batch labels");
    for (const NamedTensor& t : model.tensors()) {
      if (!all_finite(t.tensor.data())) non_finite("non-finite loss", t.name);
    }
    non_finite("non-finite loss", "model output");
  }
  g.backward(loss);
  for (const NamedTensor& t : model.tensors()) {
    if (t.kind != ParamKind::Buffer && !all_finite(t.tensor.grad())) {
      non_finite("non-finite gradient", t.name + ".grad");
    }
  }
  optimizer.step(model);
  return value;
}

std::vector<std::vector<double>> predict(Model& model, std::span<const LabeledSpectrogram> items,
                                         std::size_t batch_size) {
  if (batch_size == 0) throw InvalidInput("predict: batch size must be positive");
  const std::size_t f = model.config().input_freq;
  const std::size_t t = model.config().input_time;
  std::vector<std::vector<double>> out;
  out.reserve(items.size());
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, items.size() - start);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), start);
    const Batch batch = make_eval_batch(items, idx, f, t);
    Graph g(false);
    ForwardContext ctx;
    const Tensor probs = model.forward(g, batch.inputs, ctx);
    const std::size_t c = probs.dim(1);
    auto p = probs.data();
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(p.begin() + i * c, p.begin() + (i + 1) * c);
  }
  return out;
}

SplitMetrics evaluate_split(Model& model, std::span<const LabeledSpectrogram> items, const TaskSpec& task,
                            std::size_t batch_size) {
  SplitMetrics m;
  if (items.empty()) return m;
  const auto probs = predict(model, items, batch_size);
  std::vector<std::size_t> truth, pred;
  double kl = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& y = items[i].label;
    if (y.size() != probs[i].size()) throw InvalidInput("label width does not match the model output");
    truth.push_back(hard_label(items[i]));
    pred.push_back(argmax(probs[i]));
    for (std::size_t c = 0; c < y.size(); ++c) {
      if (y[c] > 0.0) kl += y[c] * std::log(y[c] / std::max(probs[i][c], kProbabilityFloor));
    }
  }
  const ScoreReport r = evaluate_predictions(task, truth, pred);
  std::uint64_t hits = 0;
  for (std::size_t c = 0; c < r.confusion.classes; ++c) hits += r.confusion.at(c, c);
  m.loss = kl / static_cast<double>(items.size());
  m.accuracy = static_cast<double>(hits) / static_cast<double>(items.size());
  m.se = r.se;
  m.sp = r.sp;
  m.as = r.as;
  m.hs = r.hs;
  m.score = r.score;
  return m;
}

namespace {

std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  return std::mt19937_64(seq);
}

std::vector<std::vector<double>> snapshot(const Model& model) {
  std::vector<std::vector<double>> out;
  for (const NamedTensor& t : model.tensors()) out.emplace_back(t.tensor.data().begin(), t.tensor.data().end());
  return out;
}

void restore(Model& model, const std::vector<std::vector<double>>& values) {
  auto& tensors = model.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    std::copy(values[i].begin(), values[i].end(), tensors[i].tensor.data().begin());
  }
}

}  // namespace

FitResult fit(Model& model, Adam& optimizer, std::span<const LabeledSpectrogram> train_set,
              std::span<const LabeledSpectrogram> validation_set, const TaskSpec& task, const TrainConfig& config,
              const AugmentConfig& augment, const FitOptions& options) {
  config.validate();
  augment.validate();
  FitResult result;
  result.epochs_completed = options.start_epoch;
  if (config.epochs == 0 || options.start_epoch >= config.epochs) return result;
  if (train_set.empty()) throw DataError("training set is empty");
  if (validation_set.empty()) throw DataError("validation set is empty");

  const std::size_t classes = task.num_classes();
  if (model.config().n_classes != classes) {
    throw InvalidConfig("model has " + std::to_string(model.config().n_classes) + " outputs but task " +
                        to_string(task.id) + " has " + std::to_string(classes) + " classes");
  }
  std::vector<std::size_t> class_of;
  for (const auto& item : train_set) class_of.push_back(hard_label(item));
  for (std::size_t c = 0; c < classes; ++c) {
    if (std::find(class_of.begin(), class_of.end(), c) == class_of.end()) {
      throw DataError("class '" + task.class_names[c] + "' has no training samples");
    }
  }
  const std::size_t batch_size = config.effective_batch_size(classes);
  const std::size_t batches = (train_set.size() + batch_size - 1) / batch_size;
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  std::vector<std::vector<double>> best_values;
  std::size_t stale = 0;
  auto evaluate = [&](std::size_t epoch) {
    EvalPoint p;
    p.epoch = epoch;
    p.train = evaluate_split(model, train_set, task);
    p.validation = evaluate_split(model, validation_set, task);
    result.history.push_back(p);
    std::ostringstream msg;
    msg << "epoch " << epoch << " train_acc " << p.train.accuracy << " val_loss " << p.validation.loss
        << " val_score " << p.validation.score;
    log(msg.str());
    if (p.validation.score > result.best_score) {
      result.best_score = p.validation.score;
      result.best_epoch = epoch;
      stale = 0;
      if (options.restore_best) best_values = snapshot(model);
      if (options.on_improvement) options.on_improvement(p);
    } else {
      ++stale;
    }
  };

  if (options.start_epoch == 0) evaluate(0);
  for (std::size_t epoch = options.start_epoch; epoch < config.epochs; ++epoch) {
    std::mt19937_64 rng = epoch_rng(config.seed, epoch);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::unique_ptr<BalancedSampler> sampler;
    if (augment.oversample) {
      sampler = std::make_unique<BalancedSampler>(class_of, classes, batch_size, rng());
    } else {
      std::shuffle(order.begin(), order.end(), rng);
    }
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<std::size_t> idx;
      if (sampler) {
        idx = sampler->next_batch();
      } else {
        const std::size_t lo = b * batch_size;
        idx.assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                   order.begin() + static_cast<std::ptrdiff_t>(std::min(lo + batch_size, order.size())));
      }
      const Batch batch = make_batch(train_set, idx, augment, rng);
      total += train_step(model, optimizer, batch, config, rng);
    }
    result.epoch_losses.push_back(total / static_cast<double>(batches));
    result.epochs_completed = epoch + 1;
    if (options.on_epoch_end) options.on_epoch_end(epoch + 1);

    const std::size_t done = epoch + 1;
    if (done % config.eval_every == 0 || done == config.epochs) {
      evaluate(done);
      if (config.patience > 0 && stale >= config.patience && done < config.epochs) {
        result.stopped_early = true;
        log("early stop after " + std::to_string(stale) + " evaluations without improvement");
        break;
      }
    }
  }
  if (options.restore_best && !best_values.empty()) restore(model, best_values);
  return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EvalPoint>& history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,split,loss,SE,SP,AS,HS,Score\n";
  auto row = [&](std::size_t epoch, const char* split, const SplitMetrics& m) {
    out << epoch << "," << split << "," << m.loss << "," << m.se << "," << m.sp << "," << m.as << "," << m.hs << ","
        << m.score << "\n";
  };
  for (const EvalPoint& p : history) {
    row(p.epoch, "train", p.train);
    row(p.epoch, "validation", p.validation);
  }
  write_file_atomic(path, out.str());
}

}  // namespace respnet
