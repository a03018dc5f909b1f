// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <string>
#include <vector>

#include "respnet/gradcheck.hpp"
#include "respnet/tensor.hpp"

namespace respnet::testing {

struct GradCase {
  std::string name;
  GradCheckFn fn;
  std::vector<Tensor> inputs;
  GradCheckOptions options;
};

/// One case per differentiable primitive (and per mode where behaviour differs).
std::vector<GradCase> primitive_grad_cases(std::uint64_t seed);

/// KL loss of a softmax over random logits against mixed labels, with L2.
GradCase kl_softmax_case(std::uint64_t seed);

/// Whole network on a 2 x 1 x 16 x 32 batch: input plus every trainable tensor.
GradCase tiny_model_case(std::uint64_t seed);

}  // namespace respnet::testing
