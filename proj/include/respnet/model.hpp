// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "respnet/ops.hpp"
#include "respnet/tensor.hpp"

namespace respnet {

/// Architecture hyperparameters. `input_freq` x `input_time` is the size the
/// network actually consumes, i.e. after the training crop.
struct ModelConfig {
  std::size_t input_freq = 118;
  std::size_t input_time = 502;
  std::size_t n_classes = 2;
  std::size_t doub_inc_channels = 128;
  std::vector<std::size_t> inc_res_channels{128, 256};
  /// Square IncFT kernel sizes, one list per Inc-Res block.
  std::vector<std::vector<std::size_t>> incft_kernels{{3}, {3}};
  /// Temporal IncT kernel widths, one list per Inc-Res block.
  std::vector<std::vector<std::size_t>> inct_kernels{{5, 7}, {7, 9}};
  double rn_lambda = 0.4;
  std::size_t attn_heads = 16;
  std::size_t attn_key_dim = 32;
  std::size_t fc_hidden = 512;
  double dropout = 0.2;
  double bn_momentum = 0.1;

  void validate() const;
  /// Flat "key = value" lines, parseable by parse().
  std::string serialize() const;
  static ModelConfig parse(std::string_view text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class ParamKind {
  Weight,  // convolution, dense and attention matrices; L2-regularized
  Bias,
  Norm,    // batch-norm gamma and beta
  Buffer,  // batch-norm running statistics, not trained
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
  ParamKind kind;
};

/// Per-call forward options. `rng` drives dropout and is required in
/// training mode; `trace`, when set, receives the shape at each block boundary.
struct ForwardContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;
  std::vector<std::pair<std::string, Shape>>* trace = nullptr;
};

namespace blocks {

struct Conv {
  Tensor weight;  // O x C x Kf x Kt
  Tensor bias;    // O
};

struct Dense {
  Tensor weight;  // D x U
  Tensor bias;    // U
};

struct BatchNorm {
  Tensor gamma, beta, running_mean, running_var;
};

/// Parallel [3x3], [1x1] and [4x1] convolutions, summed.
struct Inc01 {
  Conv k3x3, k1x1, k4x1;
};

/// Parallel same-padded convolutions of equal width, summed (IncFT / IncT).
struct Inception {
  std::vector<Conv> branches;
};

struct DoubInc {
  Inc01 first, second;
  BatchNorm bn1, bn2;
};

struct IncRes {
  Inception incft, inct;
  Conv shortcut;  // 1x1 projection
  BatchNorm shortcut_bn;
};

struct AttentionHead {
  ops::AttentionWeights freq_time;     // sequence = frequency, features = time
  ops::AttentionWeights freq_channel;  // sequence = frequency, features = channel
  ops::AttentionWeights time_channel;  // sequence = time, features = channel
  Dense fc1, fc2;
};

struct BlockOptions {
  double rn_lambda = 0.4;
  double dropout = 0.2;
  double bn_momentum = 0.1;
};

struct PooledMaps {
  Tensor freq_time;     // N x F x T, mean over channels
  Tensor freq_channel;  // N x F x C, max over time
  Tensor time_channel;  // N x T x C, mean over frequency
};

Tensor inc01(Graph& g, const Tensor& x, const Inc01& p);
Tensor inception(Graph& g, const Tensor& x, const Inception& p);
/// lambda * x + instance_norm_freq(x).
Tensor residual_norm(Graph& g, const Tensor& x, double lambda);
Tensor doub_inc_block(Graph& g, const Tensor& x, DoubInc& p, const BlockOptions& opt, ForwardContext& ctx);
Tensor inc_res_block(Graph& g, const Tensor& x, IncRes& p, const BlockOptions& opt, ForwardContext& ctx);
PooledMaps pooling_block(Graph& g, const Tensor& x);
Tensor attention_head(Graph& g, const PooledMaps& maps, const AttentionHead& p, const BlockOptions& opt,
                      ForwardContext& ctx);

}  // namespace blocks

/// Spatial extent after the three 2x2/stride-2 poolings of the backbone.
std::pair<std::size_t, std::size_t> pooled_extent(const ModelConfig& config);

class Model {
 public:
  /// Builds the network with Glorot-uniform weights, zero biases and unit
  /// batch-norm scales. Parameter values are rounded to single precision.
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  /// batch: N x 1 x input_freq x input_time. Returns N x n_classes softmax rows.
  Tensor forward(Graph& g, const Tensor& batch, ForwardContext& ctx);

  std::vector<NamedTensor>& tensors() { return tensors_; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  /// Everything but buffers, in registration order.
  std::vector<Tensor> trainable() const;
  std::vector<Tensor> regularized() const;
  std::vector<std::string> trainable_names() const;
  std::size_t parameter_count() const;

  void zero_grad();
  /// Copies values of every named tensor; configurations must match.
  void copy_values_from(const Model& other);
  /// Rounds every parameter and buffer to the nearest float32.
  void round_to_storage_precision();

  blocks::DoubInc& doub_inc() { return doub_inc_; }
  std::vector<blocks::IncRes>& inc_res() { return inc_res_; }
  blocks::AttentionHead& head() { return head_; }

 private:
  ModelConfig config_;
  std::vector<NamedTensor> tensors_;
  blocks::DoubInc doub_inc_;
  std::vector<blocks::IncRes> inc_res_;
  blocks::AttentionHead head_;
};

}  // namespace respnet
