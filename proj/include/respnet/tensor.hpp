// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace respnet {

using Shape = std::vector<std::size_t>;

/// Cache-line aligned allocator. Vectorized kernels peel according to the
/// buffer address, so alignment keeps reduction order, and thus results,
/// independent of where the heap places a buffer.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

std::size_t shape_size(const Shape& dims);
std::string shape_string(const Shape& dims);

/// Dense row-major double tensor with an optional gradient buffer.
///
/// Tensor is a handle: copies share storage, so a graph node and the caller
/// see the same values and gradients. Use clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape dims, double fill = 0.0, bool requires_grad = false);
  Tensor(Shape dims, std::vector<double> values, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& dims() const;
  std::size_t rank() const { return dims().size(); }
  std::size_t dim(std::size_t axis) const { return dims().at(axis); }
  std::size_t size() const;

  /// Handle semantics: constness of the handle does not extend to storage.
  std::span<double> data() const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  /// Gradient buffer, allocated (zero-filled) on first access.
  std::span<double> grad() const;
  void zero_grad();

  Tensor clone() const;
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Storage {
    Shape dims;
    Buffer values;
    Buffer grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> impl_;
};

/// Tape of recorded operations in creation (topological) order.
///
/// Ops append a node only when the graph is recording and at least one
/// input requires a gradient. backward() walks the tape once in reverse.
class Graph {
 public:
  explicit Graph(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  /// True if recording and any of `inputs` requires a gradient.
  bool tracks(std::initializer_list<const Tensor*> inputs) const;
  bool tracks(std::span<const Tensor> inputs) const;

  /// `backward` reads output.grad() and accumulates into the inputs' grads.
  void record(std::string kind, std::vector<Tensor> inputs, Tensor output, std::function<void()> backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Throws UsageError if `loss`
  /// is not a scalar or if the tape was already consumed.
  void backward(const Tensor& loss);
  /// Drops the tape so the graph can be reused.
  void reset();

  std::size_t size() const { return nodes_.size(); }
  const std::string& kind(std::size_t node) const { return nodes_.at(node).kind; }

 private:
  struct Node {
    std::string kind;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
  bool recording_ = true;
  bool consumed_ = false;
};

}  // namespace respnet
