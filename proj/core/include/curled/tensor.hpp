// Copyright 2026 The curled-wm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense float64 tensors with a dynamic reverse-mode computation record.
//
// A Tensor is a cheap handle onto a node. Operations on tensors that
// require gradients record their inputs and a backward closure; dropping
// the last handle to a result frees the record, so a graph lives exactly
// as long as the step that built it. There is no global state; separate
// threads may build and differentiate independent graphs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace curled {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

enum class OpKind {
  leaf,
  add,
  subtract,
  multiply,
  matmul,
  transpose,
  relu,
  tanh,
  sigmoid,
  exp,
  log,
  square,
  affine,
  sum,
  mean,
  concat,
  slice,
  broadcast,
  softmax,
  log_softmax,
  l2_normalize,
};

std::string_view op_name(OpKind kind);

/// Static attributes consumed by forward_op. Fields irrelevant to a kind
/// are ignored.
struct OpAttrs {
  /// sum/mean: axis to reduce, nullopt reduces everything to a scalar.
  /// concat/slice: axis to operate on, nullopt means the last axis.
  /// Negative values count from the end.
  std::optional<int> axis;
  std::size_t begin = 0;  // slice
  std::size_t end = 0;    // slice (exclusive)
  std::size_t count = 0;  // broadcast: size of the new leading axis
  double alpha = 1.0;     // affine: alpha * x + beta
  double beta = 0.0;
};

struct NodeId {
  std::uintptr_t value = 0;
  bool operator==(const NodeId&) const = default;
};

struct NodeIdHash {
  std::size_t operator()(NodeId id) const noexcept {
    return std::hash<std::uintptr_t>{}(id.value);
  }
};

namespace detail {

struct Node {
  using BackwardFn = std::function<void(std::span<const double> grad,
                                        std::span<std::vector<double>* const> input_grads)>;

  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  OpKind kind = OpKind::leaf;
  std::vector<std::shared_ptr<Node>> inputs;
  // Accumulates into the gradient buffers of inputs; an entry is null when
  // the corresponding input does not require gradients.
  BackwardFn backward;
};

}  // namespace detail

class Tensor {
 public:
  /// Scalar zero constant.
  Tensor();
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::span<const double> data() const { return node_->value; }

  /// Writable view of a leaf's values. Results of operations are immutable.
  std::span<double> mutable_data();

  /// Value of a tensor with exactly one element.
  double item() const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->kind == OpKind::leaf; }
  OpKind kind() const { return node_->kind; }
  NodeId id() const { return NodeId{reinterpret_cast<std::uintptr_t>(node_.get())}; }

  /// Constant copy of the values, cut off from the computation record.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Gradients of a scalar with respect to the requires_grad leaves it
/// depends on.
class GradientMap {
 public:
  bool contains(const Tensor& t) const { return grads_.contains(t.id()); }
  bool contains(NodeId id) const { return grads_.contains(id); }
  const Tensor& at(const Tensor& t) const;
  const Tensor& at(NodeId id) const;
  /// Gradient values of t, or zeros of t's size when t was unreachable.
  std::vector<double> values_or_zero(const Tensor& t) const;
  std::size_t size() const { return grads_.size(); }
  bool empty() const { return grads_.empty(); }

  void insert(NodeId id, Tensor grad) { grads_.insert_or_assign(id, std::move(grad)); }

 private:
  std::unordered_map<NodeId, Tensor, NodeIdHash> grads_;
};

/// Generic entry point; the named functions below are thin wrappers.
Tensor forward_op(OpKind kind, std::span<const Tensor> inputs, const OpAttrs& attrs = {});

/// Reverse-mode gradients of a scalar (shape [] or [1]). Fan-out is
/// accumulated additively.
GradientMap backward(const Tensor& scalar);

// Binary elementwise ops accept equal shapes, or one operand whose shape
// equals the other's shape minus its leading axis (batch broadcast).
Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor affine(const Tensor& a, double alpha, double beta = 0.0);
Tensor sum(const Tensor& a, std::optional<int> axis = std::nullopt);
Tensor mean(const Tensor& a, std::optional<int> axis = std::nullopt);
Tensor concat(std::span<const Tensor> parts, std::optional<int> axis = std::nullopt);
Tensor slice(const Tensor& a, std::size_t begin, std::size_t end, std::optional<int> axis = std::nullopt);
Tensor broadcast(const Tensor& a, std::size_t count);
Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);
Tensor l2_normalize(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return subtract(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return multiply(a, b); }
inline Tensor operator*(double c, const Tensor& a) { return affine(a, c); }

/// Result of comparing reverse-mode gradients against central differences.
struct FiniteDifferenceReport {
  double max_relative_error = 0.0;
  std::size_t param_index = 0;  // location of the worst coordinate
  std::size_t coordinate = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates_checked = 0;
};

using ScalarFunction = std::function<Tensor(std::span<const Tensor>)>;

/// Compares `analytic[i]` (one vector per parameter) against central
/// differences of f. The relative error per coordinate is
/// |a - n| / max(|a|, |n|, 1e-12). Parameters must be leaves; their data is
/// perturbed in place and restored.
FiniteDifferenceReport finite_difference_error(const ScalarFunction& f, std::span<const Tensor> params,
                                               std::span<const std::vector<double>> analytic,
                                               double eps = 1e-5);

/// finite_difference_error with the analytic side taken from backward(f).
FiniteDifferenceReport finite_difference_check(const ScalarFunction& f, std::span<const Tensor> params,
                                               double eps = 1e-5);

}  // namespace curled
