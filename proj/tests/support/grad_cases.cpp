// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "grad_cases.hpp"

#include <memory>
#include <random>

#include "respnet/model.hpp"
#include "respnet/ops.hpp"
#include "respnet/train.hpp"

namespace respnet::testing {

namespace {

Tensor random_tensor(Shape dims, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0, bool grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(dims), 0.0, grad);
  for (double& v : t.data()) v = u(rng);
  return t;
}

Tensor random_simplex_rows(std::size_t n, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Tensor t({n, c});
  auto d = t.data();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += d[i * c + j] = u(rng);
    for (std::size_t j = 0; j < c; ++j) d[i * c + j] /= s;
  }
  return t;
}

}  // namespace

std::vector<GradCase> primitive_grad_cases(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  using namespace ops;
  std::vector<GradCase> cases;
  auto add_case = [&](std::string name, GradCheckFn fn, std::vector<Tensor> inputs) {
    cases.push_back({std::move(name), std::move(fn), std::move(inputs), {}});
  };

  add_case("add", [](Graph& g, std::span<const Tensor> in) { return add(g, in[0], in[1]); },
           {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
  add_case("mul", [](Graph& g, std::span<const Tensor> in) { return mul(g, in[0], in[1]); },
           {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
  add_case("scale", [](Graph& g, std::span<const Tensor> in) { return scale(g, in[0], -0.7); },
           {random_tensor({5}, rng)});
  add_case("sum", [](Graph& g, std::span<const Tensor> in) { return sum(g, in[0]); }, {random_tensor({2, 3}, rng)});
  add_case("reshape", [](Graph& g, std::span<const Tensor> in) { return reshape(g, in[0], {3, 2, 2}); },
           {random_tensor({2, 6}, rng)});
  add_case("permute", [](Graph& g, std::span<const Tensor> in) { return permute(g, in[0], {2, 0, 1}); },
           {random_tensor({2, 3, 4}, rng)});
  add_case("concat",
           [](Graph& g, std::span<const Tensor> in) { return concat(g, in, 1); },
           {random_tensor({2, 3, 2}, rng), random_tensor({2, 1, 2}, rng)});
  add_case("relu", [](Graph& g, std::span<const Tensor> in) { return relu(g, in[0]); },
           {random_tensor({4, 5}, rng)});
  add_case("softmax_axis1", [](Graph& g, std::span<const Tensor> in) { return softmax(g, in[0], 1); },
           {random_tensor({3, 5}, rng, -2.0, 2.0)});
  add_case("softmax_axis0", [](Graph& g, std::span<const Tensor> in) { return softmax(g, in[0], 0); },
           {random_tensor({4, 2, 3}, rng, -2.0, 2.0)});
  add_case("dropout",
           [](Graph& g, std::span<const Tensor> in) {
             std::mt19937_64 local(5);
             return dropout(g, in[0], 0.3, true, local);
           },
           {random_tensor({4, 6}, rng)});
  add_case("matmul", [](Graph& g, std::span<const Tensor> in) { return matmul(g, in[0], in[1]); },
           {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)});
  add_case("batched_matmul",
           [](Graph& g, std::span<const Tensor> in) { return batched_matmul(g, in[0], in[1], false); },
           {random_tensor({2, 3, 4}, rng), random_tensor({2, 4, 5}, rng)});
  add_case("batched_matmul_transposed",
           [](Graph& g, std::span<const Tensor> in) { return batched_matmul(g, in[0], in[1], true); },
           {random_tensor({2, 3, 4}, rng), random_tensor({2, 5, 4}, rng)});
  add_case("dense", [](Graph& g, std::span<const Tensor> in) { return dense(g, in[0], in[1], in[2]); },
           {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng), random_tensor({2}, rng)});
  add_case("conv2d_same",
           [](Graph& g, std::span<const Tensor> in) { return conv2d(g, in[0], in[1], in[2], Padding::Same); },
           {random_tensor({2, 2, 5, 6}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)});
  add_case("conv2d_same_even_kernel",
           [](Graph& g, std::span<const Tensor> in) { return conv2d(g, in[0], in[1], in[2], Padding::Same); },
           {random_tensor({1, 2, 6, 5}, rng), random_tensor({2, 2, 4, 1}, rng), random_tensor({2}, rng)});
  add_case("conv2d_valid",
           [](Graph& g, std::span<const Tensor> in) { return conv2d(g, in[0], in[1], in[2], Padding::Valid); },
           {random_tensor({1, 2, 5, 6}, rng), random_tensor({2, 2, 2, 3}, rng), random_tensor({2}, rng)});
  add_case("avg_pool2d",
           [](Graph& g, std::span<const Tensor> in) { return pool2d(g, in[0], PoolMode::Average, 2, 2, 2, 2); },
           {random_tensor({2, 2, 5, 6}, rng)});
  add_case("max_pool2d",
           [](Graph& g, std::span<const Tensor> in) { return pool2d(g, in[0], PoolMode::Max, 2, 2, 2, 2); },
           {random_tensor({2, 2, 5, 6}, rng)});
  add_case("global_avg_over",
           [](Graph& g, std::span<const Tensor> in) { return global_avg_over(g, in[0], 2); },
           {random_tensor({2, 3, 4, 2}, rng)});
  add_case("global_max_over",
           [](Graph& g, std::span<const Tensor> in) { return global_max_over(g, in[0], 3); },
           {random_tensor({2, 3, 4, 5}, rng)});
  add_case("batch_norm_train",
           [](Graph& g, std::span<const Tensor> in) {
             Tensor mean({3}, 0.0), var({3}, 1.0);
             return batch_norm(g, in[0], in[1], in[2], mean, var, 0.1, true);
           },
           {random_tensor({4, 3, 2, 3}, rng), random_tensor({3}, rng, 0.5, 1.5), random_tensor({3}, rng)});
  add_case("batch_norm_eval",
           [](Graph& g, std::span<const Tensor> in) {
             Tensor mean({3}, std::vector<double>{0.1, -0.2, 0.3});
             Tensor var({3}, std::vector<double>{0.5, 1.5, 2.0});
             return batch_norm(g, in[0], in[1], in[2], mean, var, 0.1, false);
           },
           {random_tensor({2, 3, 2, 2}, rng), random_tensor({3}, rng, 0.5, 1.5), random_tensor({3}, rng)});
  add_case("instance_norm_freq",
           [](Graph& g, std::span<const Tensor> in) { return instance_norm_freq(g, in[0]); },
           {random_tensor({2, 2, 3, 6}, rng)});
  add_case("multi_head_attention",
           [](Graph& g, std::span<const Tensor> in) {
             AttentionWeights w{in[1], in[2], in[3], in[4], 2, 3};
             return multi_head_attention(g, in[0], w);
           },
           {random_tensor({2, 4, 5}, rng), random_tensor({5, 6}, rng), random_tensor({5, 6}, rng),
            random_tensor({5, 6}, rng), random_tensor({6, 3}, rng)});
  {
    Tensor labels = random_simplex_rows(3, 4, rng);
    add_case("kl_divergence",
             [labels](Graph& g, std::span<const Tensor> in) { return kl_divergence(g, labels, in[0]); },
             {random_tensor({3, 4}, rng, 0.1, 1.0)});
  }
  add_case("l2_penalty",
           [](Graph& g, std::span<const Tensor> in) { return l2_penalty(g, in, 0.3); },
           {random_tensor({3, 2}, rng), random_tensor({4}, rng)});
  return cases;
}

GradCase kl_softmax_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor labels = random_simplex_rows(4, 3, rng);
  GradCase c;
  c.name = "kl_loss(softmax)";
  c.inputs = {random_tensor({4, 3}, rng, -2.0, 2.0), random_tensor({3, 3}, rng)};
  c.fn = [labels](Graph& g, std::span<const Tensor> in) {
    const Tensor p = ops::softmax(g, in[0], 1);
    return kl_loss(g, labels, p, in.subspan(1, 1), 0.05);
  };
  return c;
}

GradCase tiny_model_case(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.input_freq = 16;
  cfg.input_time = 32;
  cfg.n_classes = 3;
  cfg.doub_inc_channels = 8;
  cfg.inc_res_channels = {8, 16};
  cfg.attn_heads = 2;
  cfg.attn_key_dim = 4;
  cfg.fc_hidden = 16;
  auto model = std::make_shared<Model>(cfg, seed);
  std::mt19937_64 rng(seed + 1);
  GradCase c;
  c.name = "tiny_model";
  c.inputs.push_back(random_tensor({2, 1, 16, 32}, rng));
  for (const Tensor& t : model->trainable()) c.inputs.push_back(t);
  c.fn = [model](Graph& g, std::span<const Tensor> in) {
    std::mt19937_64 local(3);
    ForwardContext ctx;
    ctx.training = true;
    ctx.rng = &local;
    return model->forward(g, in[0], ctx);
  };
  c.options.max_entries_per_input = 8;
  // A smaller step stays clear of relu and max-pool kinks. Conv biases ahead
  // of training-mode batch norm have an exactly zero gradient; the floor
  // keeps their central-difference rounding noise from counting as error.
  c.options.step = 1e-5;
  c.options.denominator_floor = 1e-6;
  return c;
}

}  // namespace respnet::testing
