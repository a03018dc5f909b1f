// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/model.hpp"

#include <cmath>
#include <string>

#include "respnet/config.hpp"
#include "respnet/error.hpp"

namespace respnet {

using ops::Padding;
using ops::PoolMode;

void ModelConfig::validate() const {
  if (n_classes < 2) throw InvalidConfig("model needs at least 2 classes");
  if (input_freq < 8 || input_time < 8) {
    throw InvalidConfig("model input " + std::to_string(input_freq) + "x" + std::to_string(input_time) +
                        " is too small for three 2x2 poolings");
  }
  if (doub_inc_channels == 0) throw InvalidConfig("doub_inc_channels must be positive");
  if (inc_res_channels.empty()) throw InvalidConfig("at least one Inc-Res block is required");
  if (incft_kernels.size() != inc_res_channels.size() || inct_kernels.size() != inc_res_channels.size()) {
    throw InvalidConfig("IncFT/IncT kernel lists need one group per Inc-Res block");
  }
  for (std::size_t b = 0; b < inc_res_channels.size(); ++b) {
    if (inc_res_channels[b] == 0) throw InvalidConfig("Inc-Res channel counts must be positive");
    if (incft_kernels[b].empty() || inct_kernels[b].empty()) {
      throw InvalidConfig("every Inc-Res block needs at least one IncFT and one IncT kernel");
    }
    for (std::size_t k : incft_kernels[b]) {
      if (k == 0) throw InvalidConfig("kernel sizes must be positive");
    }
    for (std::size_t k : inct_kernels[b]) {
      if (k == 0) throw InvalidConfig("kernel sizes must be positive");
    }
  }
  if (!(rn_lambda >= 0.0)) throw InvalidConfig("rn_lambda must be nonnegative");
  if (attn_heads == 0 || attn_key_dim == 0) throw InvalidConfig("attention heads and key_dim must be positive");
  if (fc_hidden == 0) throw InvalidConfig("fc_hidden must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidConfig("dropout must lie in [0, 1)");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) throw InvalidConfig("bn_momentum must lie in (0, 1]");
}

std::string ModelConfig::serialize() const {
  KeyValueConfig kv;
  kv.set("model.input_freq", std::to_string(input_freq));
  kv.set("model.input_time", std::to_string(input_time));
  kv.set("model.n_classes", std::to_string(n_classes));
  kv.set("model.doub_inc_channels", std::to_string(doub_inc_channels));
  kv.set("model.inc_res_channels", join_sizes(inc_res_channels));
  kv.set("model.incft_kernels", join_size_groups(incft_kernels));
  kv.set("model.inct_kernels", join_size_groups(inct_kernels));
  kv.set("model.rn_lambda", format_double(rn_lambda));
  kv.set("model.attn_heads", std::to_string(attn_heads));
  kv.set("model.attn_key_dim", std::to_string(attn_key_dim));
  kv.set("model.fc_hidden", std::to_string(fc_hidden));
  kv.set("model.dropout", format_double(dropout));
  kv.set("model.bn_momentum", format_double(bn_momentum));
  return kv.serialize();
}

ModelConfig ModelConfig::parse(std::string_view text) {
  const KeyValueConfig kv = KeyValueConfig::parse(text, "<model config>");
  ModelConfig c;
  c.input_freq = kv.get_u64("model.input_freq", c.input_freq);
  c.input_time = kv.get_u64("model.input_time", c.input_time);
  c.n_classes = kv.get_u64("model.n_classes", c.n_classes);
  c.doub_inc_channels = kv.get_u64("model.doub_inc_channels", c.doub_inc_channels);
  c.inc_res_channels = kv.get_sizes("model.inc_res_channels", c.inc_res_channels);
  c.incft_kernels = kv.get_size_groups("model.incft_kernels", c.incft_kernels);
  c.inct_kernels = kv.get_size_groups("model.inct_kernels", c.inct_kernels);
  c.rn_lambda = kv.get_double("model.rn_lambda", c.rn_lambda);
  c.attn_heads = kv.get_u64("model.attn_heads", c.attn_heads);
  c.attn_key_dim = kv.get_u64("model.attn_key_dim", c.attn_key_dim);
  c.fc_hidden = kv.get_u64("model.fc_hidden", c.fc_hidden);
  c.dropout = kv.get_double("model.dropout", c.dropout);
  c.bn_momentum = kv.get_double("model.bn_momentum", c.bn_momentum);
  return c;
}

std::pair<std::size_t, std::size_t> pooled_extent(const ModelConfig& config) {
  std::size_t f = config.input_freq / 2;
  std::size_t t = config.input_time / 2;
  for (std::size_t b = 0; b < config.inc_res_channels.size(); ++b) {
    f /= 2;
    t /= 2;
  }
  return {f, t};
}

namespace blocks {

namespace {

Tensor conv(Graph& g, const Tensor& x, const Conv& c) { return ops::conv2d(g, x, c.weight, c.bias, Padding::Same); }

Tensor batch_norm(Graph& g, const Tensor& x, BatchNorm& bn, const BlockOptions& opt, const ForwardContext& ctx) {
  return ops::batch_norm(g, x, bn.gamma, bn.beta, bn.running_mean, bn.running_var, opt.bn_momentum, ctx.training);
}

Tensor drop(Graph& g, const Tensor& x, const BlockOptions& opt, ForwardContext& ctx) {
  if (!ctx.training || opt.dropout == 0.0) return x;
  if (ctx.rng == nullptr) throw UsageError("training-mode forward needs an RNG for dropout");
  return ops::dropout(g, x, opt.dropout, true, *ctx.rng);
}

Tensor pool_half(Graph& g, const Tensor& x, PoolMode mode) { return ops::pool2d(g, x, mode, 2, 2, 2, 2); }

Tensor attend_and_pool(Graph& g, const Tensor& map, const ops::AttentionWeights& w) {
  const Tensor attended = ops::multi_head_attention(g, map, w);
  return ops::global_avg_over(g, attended, 1);
}

}  // namespace

Tensor inc01(Graph& g, const Tensor& x, const Inc01& p) {
  const Tensor a = conv(g, x, p.k3x3);
  const Tensor b = conv(g, x, p.k1x1);
  const Tensor c = conv(g, x, p.k4x1);
  return ops::add(g, ops::add(g, a, b), c);
}

Tensor inception(Graph& g, const Tensor& x, const Inception& p) {
  if (p.branches.empty()) throw InvalidConfig("inception block has no branches");
  Tensor acc = conv(g, x, p.branches[0]);
  for (std::size_t i = 1; i < p.branches.size(); ++i) acc = ops::add(g, acc, conv(g, x, p.branches[i]));
  return acc;
}

Tensor residual_norm(Graph& g, const Tensor& x, double lambda) {
  return ops::add(g, ops::scale(g, x, lambda), ops::instance_norm_freq(g, x));
}

Tensor doub_inc_block(Graph& g, const Tensor& x, DoubInc& p, const BlockOptions& opt, ForwardContext& ctx) {
  Tensor h = ops::relu(g, batch_norm(g, inc01(g, x, p.first), p.bn1, opt, ctx));
  h = ops::relu(g, batch_norm(g, inc01(g, h, p.second), p.bn2, opt, ctx));
  h = pool_half(g, h, PoolMode::Average);
  h = drop(g, h, opt, ctx);
  return residual_norm(g, h, opt.rn_lambda);
}

Tensor inc_res_block(Graph& g, const Tensor& x, IncRes& p, const BlockOptions& opt, ForwardContext& ctx) {
  auto branch = [&](const Inception& inc) {
    const Tensor h = pool_half(g, ops::relu(g, inception(g, x, inc)), PoolMode::Average);
    return residual_norm(g, h, opt.rn_lambda);
  };
  const Tensor spectral = branch(p.incft);
  const Tensor temporal = branch(p.inct);
  const Tensor shortcut = pool_half(g, batch_norm(g, conv(g, x, p.shortcut), p.shortcut_bn, opt, ctx), PoolMode::Max);
  if (spectral.dims() != temporal.dims() || spectral.dims() != shortcut.dims()) {
    throw InvalidConfig("Inc-Res branches disagree: " + shape_string(spectral.dims()) + ", " +
                        shape_string(temporal.dims()) + ", " + shape_string(shortcut.dims()));
  }
  const Tensor merged = ops::add(g, ops::add(g, spectral, temporal), shortcut);
  return drop(g, merged, opt, ctx);
}

PooledMaps pooling_block(Graph& g, const Tensor& x) {
  if (x.rank() != 4) throw InvalidInput("pooling block expects N x C x F x T, got " + shape_string(x.dims()));
  PooledMaps maps;
  maps.freq_time = ops::global_avg_over(g, x, 1);
  maps.freq_channel = ops::permute(g, ops::global_max_over(g, x, 3), {0, 2, 1});
  maps.time_channel = ops::permute(g, ops::global_avg_over(g, x, 2), {0, 2, 1});
  return maps;
}

Tensor attention_head(Graph& g, const PooledMaps& maps, const AttentionHead& p, const BlockOptions& opt,
                      ForwardContext& ctx) {
  const std::vector<Tensor> embeddings{attend_and_pool(g, maps.freq_time, p.freq_time),
                                       attend_and_pool(g, maps.freq_channel, p.freq_channel),
                                       attend_and_pool(g, maps.time_channel, p.time_channel)};
  const Tensor features = ops::concat(g, embeddings, 1);
  Tensor h = ops::relu(g, ops::dense(g, features, p.fc1.weight, p.fc1.bias));
  h = drop(g, h, opt, ctx);
  return ops::softmax(g, ops::dense(g, h, p.fc2.weight, p.fc2.bias), 1);
}

}  // namespace blocks

namespace {

float to_storage(double v) { return static_cast<float>(v); }

class Builder {
 public:
  Builder(std::vector<NamedTensor>& out, std::uint64_t seed) : out_(out), rng_(seed) {}

  Tensor add(const std::string& name, Shape dims, ParamKind kind, double fill = 0.0) {
    for (const NamedTensor& t : out_) {
      if (t.name == name) throw InvalidConfig("duplicate parameter name '" + name + "'");
    }
    Tensor t(std::move(dims), fill, kind != ParamKind::Buffer);
    out_.push_back({name, t, kind});
    return t;
  }

  Tensor glorot(const std::string& name, Shape dims, double fan_in, double fan_out) {
    Tensor t = add(name, std::move(dims), ParamKind::Weight);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (double& v : t.data()) v = to_storage(uniform(rng_));
    return t;
  }

  blocks::Conv conv(const std::string& name, std::size_t in, std::size_t out, std::size_t kf, std::size_t kt) {
    const double area = static_cast<double>(kf * kt);
    blocks::Conv c;
    c.weight = glorot(name + ".weight", {out, in, kf, kt}, static_cast<double>(in) * area,
                      static_cast<double>(out) * area);
    c.bias = add(name + ".bias", {out}, ParamKind::Bias);
    return c;
  }

  blocks::Dense dense(const std::string& name, std::size_t in, std::size_t out) {
    blocks::Dense d;
    d.weight = glorot(name + ".weight", {in, out}, static_cast<double>(in), static_cast<double>(out));
    d.bias = add(name + ".bias", {out}, ParamKind::Bias);
    return d;
  }

  blocks::BatchNorm batch_norm(const std::string& name, std::size_t channels) {
    blocks::BatchNorm bn;
    bn.gamma = add(name + ".gamma", {channels}, ParamKind::Norm, 1.0);
    bn.beta = add(name + ".beta", {channels}, ParamKind::Norm, 0.0);
    bn.running_mean = add(name + ".running_mean", {channels}, ParamKind::Buffer, 0.0);
    bn.running_var = add(name + ".running_var", {channels}, ParamKind::Buffer, 1.0);
    return bn;
  }

  blocks::Inc01 inc01(const std::string& name, std::size_t in, std::size_t out) {
    return {conv(name + ".conv3x3", in, out, 3, 3), conv(name + ".conv1x1", in, out, 1, 1),
            conv(name + ".conv4x1", in, out, 4, 1)};
  }

  ops::AttentionWeights attention(const std::string& name, std::size_t d, std::size_t heads, std::size_t key_dim) {
    const std::size_t width = heads * key_dim;
    ops::AttentionWeights w;
    w.heads = heads;
    w.key_dim = key_dim;
    w.wq = glorot(name + ".wq", {d, width}, static_cast<double>(d), static_cast<double>(width));
    w.wk = glorot(name + ".wk", {d, width}, static_cast<double>(d), static_cast<double>(width));
    w.wv = glorot(name + ".wv", {d, width}, static_cast<double>(d), static_cast<double>(width));
    w.wo = glorot(name + ".wo", {width, d}, static_cast<double>(width), static_cast<double>(d));
    return w;
  }

 private:
  std::vector<NamedTensor>& out_;
  std::mt19937_64 rng_;
};

}  // namespace

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Builder b(tensors_, seed);
  const std::size_t c0 = config_.doub_inc_channels;
  doub_inc_.first = b.inc01("doub_inc.inc01_1", 1, c0);
  doub_inc_.bn1 = b.batch_norm("doub_inc.bn1", c0);
  doub_inc_.second = b.inc01("doub_inc.inc01_2", c0, c0);
  doub_inc_.bn2 = b.batch_norm("doub_inc.bn2", c0);

  std::size_t in = c0;
  for (std::size_t blk = 0; blk < config_.inc_res_channels.size(); ++blk) {
    const std::size_t out = config_.inc_res_channels[blk];
    const std::string prefix = "inc_res" + std::to_string(blk + 1);
    blocks::IncRes r;
    for (std::size_t k : config_.incft_kernels[blk]) {
      r.incft.branches.push_back(
          b.conv(prefix + ".incft.conv" + std::to_string(k) + "x" + std::to_string(k), in, out, k, k));
    }
    for (std::size_t k : config_.inct_kernels[blk]) {
      r.inct.branches.push_back(b.conv(prefix + ".inct.conv1x" + std::to_string(k), in, out, 1, k));
    }
    r.shortcut = b.conv(prefix + ".shortcut.conv1x1", in, out, 1, 1);
    r.shortcut_bn = b.batch_norm(prefix + ".shortcut.bn", out);
    inc_res_.push_back(std::move(r));
    in = out;
  }

  const auto [f, t] = pooled_extent(config_);
  const std::size_t h = config_.attn_heads;
  const std::size_t k = config_.attn_key_dim;
  head_.freq_time = b.attention("attention.freq_time", t, h, k);
  head_.freq_channel = b.attention("attention.freq_channel", in, h, k);
  head_.time_channel = b.attention("attention.time_channel", in, h, k);
  head_.fc1 = b.dense("head.fc1", t + 2 * in, config_.fc_hidden);
  head_.fc2 = b.dense("head.fc2", config_.fc_hidden, config_.n_classes);
  (void)f;
}

Tensor Model::forward(Graph& g, const Tensor& batch, ForwardContext& ctx) {
  if (batch.rank() != 4 || batch.dim(1) != 1 || batch.dim(2) != config_.input_freq ||
      batch.dim(3) != config_.input_time) {
    throw InvalidInput("model input must be N x 1 x " + std::to_string(config_.input_freq) + " x " +
                       std::to_string(config_.input_time) + ", got " + shape_string(batch.dims()));
  }
  if (ctx.training && ctx.rng == nullptr && config_.dropout > 0.0) {
    throw UsageError("training-mode forward needs an RNG for dropout");
  }
  const blocks::BlockOptions opt{config_.rn_lambda, config_.dropout, config_.bn_momentum};
  auto trace = [&](const std::string& name, const Tensor& t) {
    if (ctx.trace) ctx.trace->emplace_back(name, t.dims());
  };
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      return fn();
    } catch (const InvalidInput& e) {
      throw InvalidInput("block " + name + ": " + e.what());
    } catch (const InvalidConfig& e) {
      throw InvalidConfig("block " + name + ": " + e.what());
    }
  };

  trace("input", batch);
  Tensor h = guarded("doub_inc", [&] { return blocks::doub_inc_block(g, batch, doub_inc_, opt, ctx); });
  trace("doub_inc", h);
  for (std::size_t blk = 0; blk < inc_res_.size(); ++blk) {
    const std::string name = "inc_res" + std::to_string(blk + 1);
    h = guarded(name, [&] { return blocks::inc_res_block(g, h, inc_res_[blk], opt, ctx); });
    trace(name, h);
  }
  const blocks::PooledMaps maps = guarded("pooling", [&] { return blocks::pooling_block(g, h); });
  trace("pool.freq_time", maps.freq_time);
  trace("pool.freq_channel", maps.freq_channel);
  trace("pool.time_channel", maps.time_channel);
  Tensor out = guarded("attention", [&] { return blocks::attention_head(g, maps, head_, opt, ctx); });
  trace("output", out);
  return out;
}

std::vector<Tensor> Model::trainable() const {
  std::vector<Tensor> out;
  for (const NamedTensor& t : tensors_) {
    if (t.kind != ParamKind::Buffer) out.push_back(t.tensor);
  }
  return out;
}

std::vector<Tensor> Model::regularized() const {
  std::vector<Tensor> out;
  for (const NamedTensor& t : tensors_) {
    if (t.kind == ParamKind::Weight) out.push_back(t.tensor);
  }
  return out;
}

std::vector<std::string> Model::trainable_names() const {
  std::vector<std::string> out;
  for (const NamedTensor& t : tensors_) {
    if (t.kind != ParamKind::Buffer) out.push_back(t.name);
  }
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const NamedTensor& t : tensors_) {
    if (t.kind != ParamKind::Buffer) n += t.tensor.size();
  }
  return n;
}

void Model::zero_grad() {
  for (NamedTensor& t : tensors_) {
    if (t.kind != ParamKind::Buffer) t.tensor.zero_grad();
  }
}

void Model::copy_values_from(const Model& other) {
  if (!(other.config_ == config_) || other.tensors_.size() != tensors_.size()) {
    throw InvalidInput("cannot copy parameters between models of different configuration");
  }
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto src = other.tensors_[i].tensor.data();
    auto dst = tensors_[i].tensor.data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

void Model::round_to_storage_precision() {
  for (NamedTensor& t : tensors_) {
    for (double& v : t.tensor.data()) v = static_cast<double>(to_storage(v));
  }
}

}  // namespace respnet
