// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "respnet/tensor.hpp"

namespace respnet {

struct GradCheckOptions {
  double step = 1e-4;             // central-difference half step
  double denominator_floor = 1e-8;
  /// Upper bound on checked entries per input (0 = all). Entries are
  /// sampled deterministically from the seed when the tensor is larger.
  std::size_t max_entries_per_input = 0;
};

/// Builds an output from the given inputs on the given graph. It must be a
/// pure function of the input values, so any randomness has to be reseeded
/// inside the callable.
using GradCheckFn = std::function<Tensor(Graph&, std::span<const Tensor>)>;

/// Compares reverse-mode gradients of sum(r * fn(inputs)), with a fixed
/// random r, against central differences. For each input that requires a
/// gradient the error is max|analytic - numeric| / max(max|numeric|, floor);
/// the largest such value is returned.
double grad_check(const GradCheckFn& fn, std::vector<Tensor> inputs, std::uint64_t seed,
                  const GradCheckOptions& options = {});

/// Same, on uniform(-1, 1) inputs of the given shapes, all requiring grad.
double grad_check(const GradCheckFn& fn, const std::vector<Shape>& input_dims, std::uint64_t seed,
                  const GradCheckOptions& options = {});

}  // namespace respnet
