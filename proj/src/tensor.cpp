// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "respnet/error.hpp"

namespace respnet {

std::size_t shape_size(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape dims, double fill, bool requires_grad) : impl_(std::make_shared<Storage>()) {
  impl_->values.assign(shape_size(dims), fill);
  impl_->dims = std::move(dims);
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape dims, std::vector<double> values, bool requires_grad)
    : impl_(std::make_shared<Storage>()) {
  if (values.size() != shape_size(dims)) {
    throw InvalidInput("tensor of shape " + shape_string(dims) + " cannot hold " +
                       std::to_string(values.size()) + " values");
  }
  impl_->values.assign(values.begin(), values.end());
  impl_->dims = std::move(dims);
  impl_->requires_grad = requires_grad;
}

namespace {
const Shape kEmptyShape;
}

const Shape& Tensor::dims() const { return impl_ ? impl_->dims : kEmptyShape; }

std::size_t Tensor::size() const { return impl_ ? impl_->values.size() : 0; }

std::span<double> Tensor::data() const { return impl_->values; }

double Tensor::item() const {
  if (size() != 1) throw InvalidInput("item() needs a single-element tensor, got " + shape_string(dims()));
  return impl_->values[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
void Tensor::set_requires_grad(bool value) { impl_->requires_grad = value; }

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<double> Tensor::grad() const {
  if (impl_->grad.size() != impl_->values.size()) impl_->grad.assign(impl_->values.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_) impl_->grad.assign(impl_->values.size(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor t(impl_->dims, 0.0, impl_->requires_grad);
  t.impl_->values = impl_->values;
  return t;
}

bool Graph::tracks(std::initializer_list<const Tensor*> inputs) const {
  if (!recording_) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t != nullptr && t->requires_grad(); });
}

bool Graph::tracks(std::span<const Tensor> inputs) const {
  if (!recording_) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

void Graph::record(std::string kind, std::vector<Tensor> inputs, Tensor output,
                   std::function<void()> backward) {
  if (consumed_) throw UsageError("cannot record onto a graph after backward(); call reset() first");
  output.set_requires_grad(true);
  nodes_.push_back({std::move(kind), std::move(inputs), std::move(output), std::move(backward)});
}

void Graph::backward(const Tensor& loss) {
  if (consumed_) throw UsageError("backward() already ran on this graph; call reset() before reusing it");
  if (loss.size() != 1) throw UsageError("backward() needs a scalar loss, got " + shape_string(loss.dims()));
  consumed_ = true;
  Tensor seed = loss;
  if (!seed.requires_grad()) return;
  seed.grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->backward();
  }
}

void Graph::reset() {
  nodes_.clear();
  consumed_ = false;
}

}  // namespace respnet
