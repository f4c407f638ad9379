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

#include "curled/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "curled/errors.hpp"

namespace curled {

using detail::Node;

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::add: return "add";
    case OpKind::subtract: return "subtract";
    case OpKind::multiply: return "multiply";
    case OpKind::matmul: return "matmul";
    case OpKind::transpose: return "transpose";
    case OpKind::relu: return "relu";
    case OpKind::tanh: return "tanh";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::square: return "square";
    case OpKind::affine: return "affine";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::broadcast: return "broadcast";
    case OpKind::softmax: return "softmax";
    case OpKind::log_softmax: return "log_softmax";
    case OpKind::l2_normalize: return "l2_normalize";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor() : Tensor(Shape{}, std::vector<double>{0.0}) {}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : node_(std::make_shared<Node>()) {
  if (element_count(shape) != values.size()) {
    throw ShapeError("Tensor: shape " + shape_string(shape) + " holds " +
                     std::to_string(element_count(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<double>{value}, requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

std::span<double> Tensor::mutable_data() {
  if (!is_leaf()) {
    throw ContractError(std::string("Tensor::mutable_data: result of '") + std::string(op_name(kind())) +
                        "' is immutable");
  }
  return node_->value;
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("Tensor::item: tensor of shape " + shape_string(shape()) + " is not a scalar");
  return node_->value[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2 || row >= shape()[0] || col >= shape()[1]) {
    throw ShapeError("Tensor::at: index (" + std::to_string(row) + "," + std::to_string(col) + ") out of range for " +
                     shape_string(shape()));
  }
  return node_->value[row * shape()[1] + col];
}

Tensor Tensor::detach() const { return Tensor(shape(), node_->value, false); }

const Tensor& GradientMap::at(const Tensor& t) const { return at(t.id()); }

const Tensor& GradientMap::at(NodeId id) const {
  auto it = grads_.find(id);
  if (it == grads_.end()) throw ContractError("GradientMap::at: no gradient recorded for tensor");
  return it->second;
}

std::vector<double> GradientMap::values_or_zero(const Tensor& t) const {
  auto it = grads_.find(t.id());
  if (it == grads_.end()) return std::vector<double>(t.size(), 0.0);
  return {it->second.data().begin(), it->second.data().end()};
}

// ---------------------------------------------------------------------------
// Graph construction helpers

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::shared_ptr<Node> new_node(OpKind kind, Shape shape, std::vector<double> value) {
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->shape = std::move(shape);
  node->value = std::move(value);
  return node;
}

// Wires inputs and the backward closure into `node` when any input requires
// gradients, after verifying the forward result is finite.
Tensor finish(std::shared_ptr<Node> node, std::span<const Tensor> inputs, Node::BackwardFn fn) {
  if (!all_finite(node->value)) {
    const bool inputs_finite =
        std::all_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return all_finite(t.data()); });
    if (inputs_finite) {
      const auto bad = std::find_if(node->value.begin(), node->value.end(), [](double x) { return !std::isfinite(x); });
      throw NumericalError(std::string(op_name(node->kind)) + ": non-finite output at index " +
                           std::to_string(bad - node->value.begin()) + " from finite inputs");
    }
  }
  const bool needs_grad = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (needs_grad) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(fn);
  }
  return Tensor(std::move(node));
}

Tensor finish(std::shared_ptr<Node> node, std::initializer_list<Tensor> inputs, Node::BackwardFn fn) {
  return finish(std::move(node), std::span<const Tensor>(inputs.begin(), inputs.size()), std::move(fn));
}

std::size_t resolve_axis(std::string_view op, const Shape& shape, std::optional<int> axis, int fallback) {
  const int rank = static_cast<int>(shape.size());
  int ax = axis.value_or(fallback);
  if (ax < 0) ax += rank;
  if (ax < 0 || ax >= rank) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis.value_or(fallback)) + " invalid for shape " +
                     shape_string(shape));
  }
  return static_cast<std::size_t>(ax);
}

// outer x dim x inner decomposition of a shape around one axis.
struct AxisSplit {
  std::size_t outer = 1, dim = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.dim = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

std::size_t last_axis_extent(std::string_view op, const Tensor& a) {
  if (a.rank() == 0 || a.shape().back() == 0) {
    throw ShapeError(std::string(op) + ": needs a non-empty last axis, got shape " + shape_string(a.shape()));
  }
  return a.shape().back();
}

// ---------------------------------------------------------------------------
// Elementwise binary with leading-axis broadcast

struct BinaryPlan {
  Shape out;
  bool a_full = true;
  bool b_full = true;
};

BinaryPlan plan_binary(std::string_view op, const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb) return {sa, true, true};
  if (sa.size() == sb.size() + 1 && std::equal(sa.begin() + 1, sa.end(), sb.begin(), sb.end())) {
    return {sa, true, false};
  }
  if (sb.size() == sa.size() + 1 && std::equal(sb.begin() + 1, sb.end(), sa.begin(), sa.end())) {
    return {sb, false, true};
  }
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(sa) + " and " + shape_string(sb) +
                   " (only leading-axis batch broadcast is supported)");
}

template <typename Forward, typename GradA, typename GradB>
Tensor binary(OpKind kind, const Tensor& a, const Tensor& b, Forward fwd, GradA ga, GradB gb) {
  const BinaryPlan plan = plan_binary(op_name(kind), a, b);
  const std::size_t n = element_count(plan.out);
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = fwd(av[plan.a_full ? i : i % na], bv[plan.b_full ? i : i % nb]);
  }
  const Node* an = a.node().get();
  const Node* bn = b.node().get();
  return finish(new_node(kind, plan.out, std::move(out)), {a, b},
                [an, bn, plan, n, ga, gb](std::span<const double> g, std::span<std::vector<double>* const> grads) {
                  const std::size_t na = an->value.size();
                  const std::size_t nb = bn->value.size();
                  for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t ia = plan.a_full ? i : i % na;
                    const std::size_t ib = plan.b_full ? i : i % nb;
                    if (grads[0]) (*grads[0])[ia] += ga(g[i], an->value[ia], bn->value[ib]);
                    if (grads[1]) (*grads[1])[ib] += gb(g[i], an->value[ia], bn->value[ib]);
                  }
                });
}

// ---------------------------------------------------------------------------
// Elementwise unary; `grad` receives (upstream, input, output).

template <typename Forward, typename Grad>
Tensor unary(OpKind kind, const Tensor& a, Forward fwd, Grad grad) {
  const auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  auto node = new_node(kind, a.shape(), std::move(out));
  const Node* an = a.node().get();
  const Node* self = node.get();
  return finish(std::move(node), {a},
                [an, self, grad](std::span<const double> g, std::span<std::vector<double>* const> grads) {
                  auto& ga = *grads[0];
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += grad(g[i], an->value[i], self->value[i]);
                });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Operations

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      OpKind::add, a, b, [](double x, double y) { return x + y; }, [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  return binary(
      OpKind::subtract, a, b, [](double x, double y) { return x - y; }, [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  return binary(
      OpKind::multiply, a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; }, [](double g, double x, double) { return g * x; });
}

namespace {

// C[m, n] += A[m, k] * B[k, n], rows of C processed four at a time so each
// row of B is loaded once per block.
// Mostly-zero inputs (rendered frames) take a row loop that skips zero
// entries; adding 0 * b leaves every sum unchanged for finite b.
void matmul_accumulate(const double* A, const double* B, double* C, std::size_t m, std::size_t k, std::size_t n) {
  std::size_t zeros = 0;
  for (std::size_t e = 0; e < m * k; ++e) zeros += A[e] == 0.0;
  const bool sparse = 2 * zeros > m * k;
  std::size_t i = 0;
  for (; !sparse && i + 4 <= m; i += 4) {
    double* c0 = C + i * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    for (std::size_t p = 0; p < k; ++p) {
      const double a0 = A[i * k + p];
      const double a1 = A[(i + 1) * k + p];
      const double a2 = A[(i + 2) * k + p];
      const double a3 = A[(i + 3) * k + p];
      const double* b = B + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bj = b[j];
        c0[j] += a0 * bj;
        c1[j] += a1 * bj;
        c2[j] += a2 * bj;
        c3[j] += a3 * bj;
      }
    }
  }
  for (; i < m; ++i) {
    double* c = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* b = B + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

// C[m, k] += G[m, n] * B[k, n]^T.
void matmul_transposed_accumulate(const double* G, const double* B, double* C, std::size_t m, std::size_t n,
                                  std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = G + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = B + p * n;
      double acc[4] = {0.0, 0.0, 0.0, 0.0};
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        acc[0] += grow[j] * brow[j];
        acc[1] += grow[j + 1] * brow[j + 1];
        acc[2] += grow[j + 2] * brow[j + 2];
        acc[3] += grow[j + 3] * brow[j + 3];
      }
      for (; j < n; ++j) acc[0] += grow[j] * brow[j];
      C[i * k + p] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.shape()[1];
  const double* A = a.data().data();
  const double* B = b.data().data();
  std::vector<double> out(m * n, 0.0);
  matmul_accumulate(A, B, out.data(), m, k, n);
  const Node* an = a.node().get();
  const Node* bn = b.node().get();
  return finish(new_node(OpKind::matmul, Shape{m, n}, std::move(out)), {a, b},
                [an, bn, m, k, n](std::span<const double> g, std::span<std::vector<double>* const> grads) {
                  const double* A = an->value.data();
                  const double* B = bn->value.data();
                  if (grads[0]) {
                    matmul_transposed_accumulate(g.data(), B, grads[0]->data(), m, n, k);
                  }
                  if (grads[1]) {
                    double* gB = grads[1]->data();
                    // gB[p, :] += sum_i A[i, p] * g[i, :], one output row at a time.
                    for (std::size_t p = 0; p < k; ++p) {
                      double* gbrow = gB + p * n;
                      for (std::size_t i = 0; i < m; ++i) {
                        const double av = A[i * k + p];
                        if (av == 0.0) continue;
                        const double* grow = g.data() + i * n;
                        for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
                      }
                    }
                  }
                });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose: expected rank 2, got shape " + shape_string(a.shape()));
  const std::size_t r = a.shape()[0];
  const std::size_t c = a.shape()[1];
  const auto av = a.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return finish(new_node(OpKind::transpose, Shape{c, r}, std::move(out)), {a},
                [r, c](std::span<const double> g, std::span<std::vector<double>* const> grads) {
                  auto& ga = *grads[0];
                  for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
                });
}

Tensor relu(const Tensor& a) {
  return unary(
      OpKind::relu, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double g, double x, double) { return x > 0.0 ? g : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      OpKind::tanh, a, [](double x) { return std::tanh(x); },
      [](double g, double, double y) { return g * (1.0 - y * y); });
}

Tensor sigmoid(const Tensor& a) {
  return unary(OpKind::sigmoid, a, stable_sigmoid, [](double g, double, double y) { return g * y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(
      OpKind::exp, a, [](double x) { return std::exp(x); }, [](double g, double, double y) { return g * y; });
}

Tensor log(const Tensor& a) {
  const auto av = a.data();
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (!(av[i] > 0.0)) {
      throw DomainError("log: non-positive input " + std::to_string(av[i]) + " at index " + std::to_string(i));
    }
  }
  return unary(
      OpKind::log, a, [](double x) { return std::log(x); }, [](double g, double x, double) { return g / x; });
}

Tensor square(const Tensor& a) {
  return unary(
      OpKind::square, a, [](double x) { return x * x; }, [](double g, double x, double) { return 2.0 * x * g; });
}

Tensor affine(const Tensor& a, double alpha, double beta) {
  return unary(
      OpKind::affine, a, [alpha, beta](double x) { return alpha * x + beta; },
      [alpha](double g, double, double) { return alpha * g; });
}

namespace {

Tensor reduce(OpKind kind, const Tensor& a, std::optional<int> axis) {
  const bool average = kind == OpKind::mean;
  const auto av = a.data();
  if (!axis) {
    if (average && av.empty()) throw ContractError("mean: empty input");
    double acc = 0.0;
    for (double x : av) acc += x;
    const double scale = average ? 1.0 / static_cast<double>(av.size()) : 1.0;
    return finish(new_node(kind, Shape{}, {average ? acc * scale : acc}), {a},
                  [scale](std::span<const double> g, std::span<std::vector<double>* const> grads) {
                    for (double& v : *grads[0]) v += g[0] * scale;
                  });
  }
  const std::size_t ax = resolve_axis(op_name(kind), a.shape(), axis, -1);
  const AxisSplit s = split_at(a.shape(), ax);
  if (average && s.dim == 0) throw ContractError("mean: reduced axis is empty");
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(ax));
  const double scale = average ? 1.0 / static_cast<double>(s.dim) : 1.0;
  std::vector<double> out(s.outer * s.inner, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t d = 0; d < s.dim; ++d)
      for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += av[(o * s.dim + d) * s.inner + i];
  if (average)
    for (double& v : out) v *= scale;
  return finish(new_node(kind, std::move(out_shape), std::move(out)), {a},
                [s, scale](std::span<const double> g, std::span<std::vector<double>* const> grads) {
                  auto& ga = *grads[0];
                  for (std::size_t o = 0; o < s.outer; ++o)
                    for (std::size_t d = 0; d < s.dim; ++d)
                      for (std::size_t i = 0; i < s.inner; ++i)
                        ga[(o * s.dim + d) * s.inner + i] += g[o * s.inner + i] * scale;
                });
}

}  // namespace

Tensor sum(const Tensor& a, std::optional<int> axis) { return reduce(OpKind::sum, a, axis); }
Tensor mean(const Tensor& a, std::optional<int> axis) { return reduce(OpKind::mean, a, axis); }

Tensor concat(std::span<const Tensor> parts, std::optional<int> axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  const std::size_t ax = resolve_axis("concat", first, axis, -1);
  std::vector<std::size_t> dims;
  std::size_t total = 0;
  for (const Tensor& t : parts) {
    const Shape& s = t.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == ax) || s[i] == first[i];
    if (!ok) {
      throw ShapeError("concat: shape " + shape_string(s) + " incompatible with " + shape_string(first) +
                       " along axis " + std::to_string(ax));
    }
    dims.push_back(s[ax]);
    total += s[ax];
  }
  Shape out_shape = first;
  out_shape[ax] = total;
  const AxisSplit s = split_at(out_shape, ax);
  std::vector<double> out(element_count(out_shape));
  std::size_t cursor = 0;
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const std::size_t chunk = dims[p] * s.inner;
      const double* src = parts[p].data().data() + o * chunk;
      std::copy(src, src + chunk, out.begin() + static_cast<std::ptrdiff_t>(cursor));
      cursor += chunk;
    }
  }
  return finish(new_node(OpKind::concat, std::move(out_shape), std::move(out)), parts,
                [s, dims](std::span<const double> g, std::span<std::vector<double>* const> grads) {
                  std::size_t cursor = 0;
                  for (std::size_t o = 0; o < s.outer; ++o) {
                    for (std::size_t p = 0; p < dims.size(); ++p) {
                      const std::size_t chunk = dims[p] * s.inner;
                      if (grads[p]) {
                        double* dst = grads[p]->data() + o * chunk;
                        for (std::size_t i = 0; i < chunk; ++i) dst[i] += g[cursor + i];
                      }
                      cursor += chunk;
                    }
                  }
                });
}

Tensor slice(const Tensor& a, std::size_t begin, std::size_t end, std::optional<int> axis) {
  const std::size_t ax = resolve_axis("slice", a.shape(), axis, -1);
  const AxisSplit s = split_at(a.shape(), ax);
  if (begin >= end || end > s.dim) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for axis " +
                     std::to_string(ax) + " of shape " + shape_string(a.shape()));
  }
  Shape out_shape = a.shape();
  out_shape[ax] = end - begin;
  const std::size_t width = (end - begin) * s.inner;
  const auto av = a.data();
  std::vector<double> out(s.outer * width);
  for (std::size_t o = 0; o < s.outer; ++o) {
    const double* src = av.data() + (o * s.dim + begin) * s.inner;
    std::copy(src, src + width, out.begin() + static_cast<std::ptrdiff_t>(o * width));
  }
  return finish(new_node(OpKind::slice, std::move(out_shape), std::move(out)), {a},
                [s, begin, width](std::span<const double> g, std::span<std::vector<double>* const> grads) {
                  auto& ga = *grads[0];
                  for (std::size_t o = 0; o < s.outer; ++o) {
                    double* dst = ga.data() + (o * s.dim + begin) * s.inner;
                    for (std::size_t i = 0; i < width; ++i) dst[i] += g[o * width + i];
                  }
                });
}

Tensor broadcast(const Tensor& a, std::size_t count) {
  if (count == 0) throw ShapeError("broadcast: count must be positive");
  Shape out_shape;
  out_shape.reserve(a.rank() + 1);
  out_shape.push_back(count);
  out_shape.insert(out_shape.end(), a.shape().begin(), a.shape().end());
  const auto av = a.data();
  const std::size_t n = av.size();
  std::vector<double> out(count * n);
  for (std::size_t r = 0; r < count; ++r) std::copy(av.begin(), av.end(), out.begin() + static_cast<std::ptrdiff_t>(r * n));
  return finish(new_node(OpKind::broadcast, std::move(out_shape), std::move(out)), {a},
                [count, n](std::span<const double> g, std::span<std::vector<double>* const> grads) {
                  auto& ga = *grads[0];
                  for (std::size_t r = 0; r < count; ++r)
                    for (std::size_t i = 0; i < n; ++i) ga[i] += g[r * n + i];
                });
}

Tensor softmax(const Tensor& a) {
  const std::size_t width = last_axis_extent("softmax", a);
  const auto av = a.data();
  const std::size_t rows = av.size() / width;
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * width;
    double* y = out.data() + r * width;
    const double mx = *std::max_element(x, x + width);
    double z = 0.0;
    for (std::size_t i = 0; i < width; ++i) z += (y[i] = std::exp(x[i] - mx));
    for (std::size_t i = 0; i < width; ++i) y[i] /= z;
  }
  auto node = new_node(OpKind::softmax, a.shape(), std::move(out));
  const Node* self = node.get();
  return finish(std::move(node), {a},
                [self, rows, width](std::span<const double> g, std::span<std::vector<double>* const> grads) {
                  auto& ga = *grads[0];
                  for (std::size_t r = 0; r < rows; ++r) {
                    const double* y = self->value.data() + r * width;
                    const double* gr = g.data() + r * width;
                    double dot = 0.0;
                    for (std::size_t i = 0; i < width; ++i) dot += gr[i] * y[i];
                    for (std::size_t i = 0; i < width; ++i) ga[r * width + i] += y[i] * (gr[i] - dot);
                  }
                });
}

Tensor log_softmax(const Tensor& a) {
  const std::size_t width = last_axis_extent("log_softmax", a);
  const auto av = a.data();
  const std::size_t rows = av.size() / width;
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * width;
    const double mx = *std::max_element(x, x + width);
    double z = 0.0;
    for (std::size_t i = 0; i < width; ++i) z += std::exp(x[i] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t i = 0; i < width; ++i) out[r * width + i] = x[i] - lse;
  }
  auto node = new_node(OpKind::log_softmax, a.shape(), std::move(out));
  const Node* self = node.get();
  return finish(std::move(node), {a},
                [self, rows, width](std::span<const double> g, std::span<std::vector<double>* const> grads) {
                  auto& ga = *grads[0];
                  for (std::size_t r = 0; r < rows; ++r) {
                    const double* y = self->value.data() + r * width;
                    const double* gr = g.data() + r * width;
                    double gsum = 0.0;
                    for (std::size_t i = 0; i < width; ++i) gsum += gr[i];
                    for (std::size_t i = 0; i < width; ++i) ga[r * width + i] += gr[i] - std::exp(y[i]) * gsum;
                  }
                });
}

Tensor l2_normalize(const Tensor& a) {
  const std::size_t width = last_axis_extent("l2_normalize", a);
  const auto av = a.data();
  const std::size_t rows = av.size() / width;
  std::vector<double> norms(rows);
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * width;
    double sq = 0.0;
    for (std::size_t i = 0; i < width; ++i) sq += x[i] * x[i];
    if (!(sq > 0.0)) throw DomainError("l2_normalize: zero vector in row " + std::to_string(r));
    norms[r] = std::sqrt(sq);
    for (std::size_t i = 0; i < width; ++i) out[r * width + i] = x[i] / norms[r];
  }
  auto node = new_node(OpKind::l2_normalize, a.shape(), std::move(out));
  const Node* self = node.get();
  return finish(std::move(node), {a},
                [self, rows, width, norms = std::move(norms)](std::span<const double> g,
                                                             std::span<std::vector<double>* const> grads) {
                  auto& ga = *grads[0];
                  for (std::size_t r = 0; r < rows; ++r) {
                    const double* y = self->value.data() + r * width;
                    const double* gr = g.data() + r * width;
                    double dot = 0.0;
                    for (std::size_t i = 0; i < width; ++i) dot += gr[i] * y[i];
                    for (std::size_t i = 0; i < width; ++i) ga[r * width + i] += (gr[i] - y[i] * dot) / norms[r];
                  }
                });
}

Tensor forward_op(OpKind kind, std::span<const Tensor> inputs, const OpAttrs& attrs) {
  auto arity = [&](std::size_t n) {
    if (inputs.size() != n) {
      throw ShapeError(std::string(op_name(kind)) + ": expected " + std::to_string(n) + " inputs, got " +
                       std::to_string(inputs.size()));
    }
  };
  switch (kind) {
    case OpKind::leaf: throw ContractError("forward_op: 'leaf' is not an operation");
    case OpKind::add: arity(2); return add(inputs[0], inputs[1]);
    case OpKind::subtract: arity(2); return subtract(inputs[0], inputs[1]);
    case OpKind::multiply: arity(2); return multiply(inputs[0], inputs[1]);
    case OpKind::matmul: arity(2); return matmul(inputs[0], inputs[1]);
    case OpKind::transpose: arity(1); return transpose(inputs[0]);
    case OpKind::relu: arity(1); return relu(inputs[0]);
    case OpKind::tanh: arity(1); return tanh(inputs[0]);
    case OpKind::sigmoid: arity(1); return sigmoid(inputs[0]);
    case OpKind::exp: arity(1); return exp(inputs[0]);
    case OpKind::log: arity(1); return log(inputs[0]);
    case OpKind::square: arity(1); return square(inputs[0]);
    case OpKind::affine: arity(1); return affine(inputs[0], attrs.alpha, attrs.beta);
    case OpKind::sum: arity(1); return sum(inputs[0], attrs.axis);
    case OpKind::mean: arity(1); return mean(inputs[0], attrs.axis);
    case OpKind::concat: return concat(inputs, attrs.axis);
    case OpKind::slice: arity(1); return slice(inputs[0], attrs.begin, attrs.end, attrs.axis);
    case OpKind::broadcast: arity(1); return broadcast(inputs[0], attrs.count);
    case OpKind::softmax: arity(1); return softmax(inputs[0]);
    case OpKind::log_softmax: arity(1); return log_softmax(inputs[0]);
    case OpKind::l2_normalize: arity(1); return l2_normalize(inputs[0]);
  }
  throw ContractError("forward_op: unknown operation kind");
}

// ---------------------------------------------------------------------------
// Reverse pass

GradientMap backward(const Tensor& scalar) {
  const Shape& s = scalar.shape();
  if (!(s.empty() || (s.size() == 1 && s[0] == 1))) {
    throw ContractError("backward: expected a scalar of shape [] or [1], got " + shape_string(s));
  }
  GradientMap result;
  if (!scalar.requires_grad()) return result;

  // Post-order over the requires_grad subgraph; reversed it is a valid
  // reverse-topological schedule.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  Node* root = scalar.node().get();
  visited.insert(root);
  stack.emplace_back(root, 0);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::unordered_map<Node*, std::vector<double>> grads;
  grads.emplace(root, std::vector<double>{1.0});
  std::vector<std::vector<double>*> input_grads;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    auto found = grads.find(node);
    if (found == grads.end()) continue;
    if (node->kind == OpKind::leaf) {
      result.insert(NodeId{reinterpret_cast<std::uintptr_t>(node)}, Tensor(node->shape, std::move(found->second)));
      grads.erase(found);
      continue;
    }
    // Element references survive rehashing; iterators do not.
    const std::vector<double>& upstream = found->second;
    input_grads.assign(node->inputs.size(), nullptr);
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      Node* in = node->inputs[i].get();
      if (!in->requires_grad) continue;
      auto [slot, inserted] = grads.try_emplace(in);
      if (inserted) slot->second.assign(in->value.size(), 0.0);
      input_grads[i] = &slot->second;
    }
    node->backward(upstream, input_grads);
    grads.erase(node);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Finite differences

FiniteDifferenceReport finite_difference_error(const ScalarFunction& f, std::span<const Tensor> params,
                                               std::span<const std::vector<double>> analytic, double eps) {
  if (!(eps > 0.0)) throw ContractError("finite_difference_check: eps must be positive");
  if (analytic.size() != params.size()) {
    throw ContractError("finite_difference_check: analytic gradient count does not match parameter count");
  }
  FiniteDifferenceReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor handle = params[p];
    if (!handle.is_leaf()) throw ContractError("finite_difference_check: parameter " + std::to_string(p) + " is not a leaf");
    if (analytic[p].size() != handle.size()) {
      throw ContractError("finite_difference_check: analytic gradient size mismatch for parameter " + std::to_string(p));
    }
    auto data = handle.mutable_data();
    for (std::size_t c = 0; c < data.size(); ++c) {
      const double original = data[c];
      double plus = 0.0;
      double minus = 0.0;
      try {
        data[c] = original + eps;
        plus = f(params).item();
        data[c] = original - eps;
        minus = f(params).item();
      } catch (const NumericalError& e) {
        data[c] = original;
        throw NumericalError(std::string("finite_difference_check: parameter ") + std::to_string(p) + " coordinate " +
                             std::to_string(c) + ": " + e.what());
      }
      data[c] = original;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericalError("finite_difference_check: non-finite objective at parameter " + std::to_string(p) +
                             " coordinate " + std::to_string(c));
      }
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[p][c];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coordinates_checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.param_index = p;
        report.coordinate = c;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

FiniteDifferenceReport finite_difference_check(const ScalarFunction& f, std::span<const Tensor> params, double eps) {
  const GradientMap grads = backward(f(params));
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Tensor& p : params) analytic.push_back(grads.values_or_zero(p));
  return finite_difference_error(f, params, analytic, eps);
}

}  // namespace curled
