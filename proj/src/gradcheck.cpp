// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "respnet/error.hpp"
#include "respnet/ops.hpp"

namespace respnet {

namespace {

double projected_value(const GradCheckFn& fn, std::span<const Tensor> inputs, const std::vector<double>& weights) {
  Graph g(false);
  const Tensor out = fn(g, inputs);
  double acc = 0.0;
  auto v = out.data();
  for (std::size_t i = 0; i < v.size(); ++i) acc += weights[i] * v[i];
  return acc;
}

}  // namespace

double grad_check(const GradCheckFn& fn, std::vector<Tensor> inputs, std::uint64_t seed,
                  const GradCheckOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  std::vector<double> weights;
  {
    for (Tensor& t : inputs) t.zero_grad();
    Graph g;
    const Tensor out = fn(g, inputs);
    weights.resize(out.size());
    for (double& w : weights) w = uniform(rng);
    const Tensor r(out.dims(), weights);
    const Tensor loss = ops::sum(g, ops::mul(g, out, r));
    g.backward(loss);
  }

  double worst = 0.0;
  for (Tensor& input : inputs) {
    if (!input.requires_grad()) continue;
    const std::vector<double> analytic(input.grad().begin(), input.grad().end());
    std::vector<std::size_t> entries(input.size());
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    if (options.max_entries_per_input > 0 && entries.size() > options.max_entries_per_input) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.max_entries_per_input);
      std::sort(entries.begin(), entries.end());
    }
    double max_diff = 0.0;
    double max_numeric = 0.0;
    auto values = input.data();
    for (std::size_t idx : entries) {
      const double saved = values[idx];
      values[idx] = saved + options.step;
      const double plus = projected_value(fn, inputs, weights);
      values[idx] = saved - options.step;
      const double minus = projected_value(fn, inputs, weights);
      values[idx] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      max_diff = std::max(max_diff, std::abs(numeric - analytic[idx]));
      max_numeric = std::max(max_numeric, std::abs(numeric));
    }
    worst = std::max(worst, max_diff / std::max(max_numeric, options.denominator_floor));
  }
  return worst;
}

double grad_check(const GradCheckFn& fn, const std::vector<Shape>& input_dims, std::uint64_t seed,
                  const GradCheckOptions& options) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<Tensor> inputs;
  for (const Shape& dims : input_dims) {
    Tensor t(dims, 0.0, true);
    for (double& v : t.data()) v = uniform(rng);
    inputs.push_back(t);
  }
  return grad_check(fn, std::move(inputs), seed, options);
}

}  // namespace respnet
