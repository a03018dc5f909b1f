// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "respnet/tensor.hpp"

// Differentiable primitives. Every function computes its forward value
// eagerly and, when `g` tracks one of its inputs, records a backward closure.
namespace respnet::ops {

enum class Padding { Same, Valid };
enum class PoolMode { Average, Max };

inline constexpr double kNormEpsilon = 1e-5;

// Elementwise and structural.
Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor scale(Graph& g, const Tensor& x, double factor);
Tensor sum(Graph& g, const Tensor& x);
Tensor reshape(Graph& g, const Tensor& x, Shape dims);
Tensor permute(Graph& g, const Tensor& x, const std::vector<std::size_t>& order);
Tensor concat(Graph& g, std::span<const Tensor> parts, std::size_t axis);

// Activations.
Tensor relu(Graph& g, const Tensor& x);
/// Max-subtracted softmax along `axis`.
Tensor softmax(Graph& g, const Tensor& x, std::size_t axis);
/// Inverted dropout; identity when !training or p == 0.
Tensor dropout(Graph& g, const Tensor& x, double p, bool training, std::mt19937_64& rng);

// Linear algebra.
/// [M x K] . [K x N]
Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);
/// [B x M x K] . [B x K x N], or [B x M x K] . [B x N x K]^T when transpose_b.
Tensor batched_matmul(Graph& g, const Tensor& a, const Tensor& b, bool transpose_b);
/// x [N x D], w [D x U], bias [U].
Tensor dense(Graph& g, const Tensor& x, const Tensor& w, const Tensor& bias);

/// Cross-correlation. x [N x C x F x T], w [O x C x Kf x Kt], bias [O].
/// Same padding puts the odd extra row/column of an even kernel on the high side.
Tensor conv2d(Graph& g, const Tensor& x, const Tensor& w, const Tensor& bias, Padding padding);

/// Windowed pooling over the last two axes of an N x C x F x T tensor; output
/// extents use floor division.
Tensor pool2d(Graph& g, const Tensor& x, PoolMode mode, std::size_t kernel_f, std::size_t kernel_t,
              std::size_t stride_f, std::size_t stride_t);
/// Mean over one axis, which is removed from the shape.
Tensor global_avg_over(Graph& g, const Tensor& x, std::size_t axis);
/// Max over one axis, which is removed from the shape. Ties go to the first index.
Tensor global_max_over(Graph& g, const Tensor& x, std::size_t axis);

/// Per-channel (axis 1) normalization. Training mode uses biased batch
/// statistics and folds them into the running buffers:
///   running = (1 - momentum) * running + momentum * batch   (unbiased variance)
Tensor batch_norm(Graph& g, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var, double momentum, bool training);

/// Zero-mean, unit-variance over the time axis for every (sample, channel,
/// frequency) row of an N x C x F x T tensor. No affine parameters.
Tensor instance_norm_freq(Graph& g, const Tensor& x);

struct AttentionWeights {
  Tensor wq;  // D x (H*K), head h owns columns [h*K, (h+1)*K)
  Tensor wk;  // D x (H*K)
  Tensor wv;  // D x (H*K)
  Tensor wo;  // (H*K) x D_out
  std::size_t heads = 1;
  std::size_t key_dim = 1;
};

/// Self-attention over x [N x S x D]: per head softmax(Q K^T / sqrt(K)) V,
/// heads concatenated and projected by wo. Returns N x S x D_out.
Tensor multi_head_attention(Graph& g, const Tensor& x, const AttentionWeights& weights);

}  // namespace respnet::ops
