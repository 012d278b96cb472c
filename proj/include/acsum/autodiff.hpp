// Copyright 2026 The acsum Authors.
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

// Tape-based reverse-mode differentiation over small dense arrays.
//
// A Graph records every primitive application in creation order, which is
// already a topological order, so backward() is a single reverse sweep.
// Parameters live in a ParameterStore outside any graph; a graph binds them
// as leaves whose gradient buffer is the store's accumulated gradient.

#ifndef ACSUM_AUTODIFF_HPP_
#define ACSUM_AUTODIFF_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "acsum/random.hpp"

namespace acsum::ad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

struct Array {
  Shape shape;
  std::vector<double> data;

  Array() = default;
  explicit Array(Shape s, double fill = 0.0);

  static Array scalar(double v) { return vector({v}); }
  static Array vector(std::vector<double> values);
  static Array matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  bool all_finite() const;
  bool operator==(const Array&) const = default;
};

struct Parameter {
  std::string name;
  Array value;
  Array grad;
  // Optimizer accumulators. Adadelta keeps E[g^2] in first, E[dx^2] in second.
  Array first_moment;
  Array second_moment;
};

class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  // Names must be unique; addresses stay valid for the store's lifetime.
  Parameter& add(const std::string& name, Shape shape);

  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  // Parameters whose name starts with prefix, in name order.
  std::vector<Parameter*> group(std::string_view prefix);
  std::vector<const Parameter*> group(std::string_view prefix) const;

  void zero_gradients(std::string_view prefix = "");
  void initialize_uniform(Rng& rng, double scale, std::string_view prefix = "");

  std::size_t size() const { return entries_.size(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, Parameter, std::less<>> entries_;
};

enum class Op : std::uint8_t {
  kInput,
  kConstant,
  kParameter,
  kMatVec,          // A x
  kMatTVec,         // A^T x
  kMatMulNT,        // H W^T
  kAdd,
  kSub,
  kMul,             // elementwise
  kAddRowBroadcast, // M + 1 v^T
  kSigmoid,
  kTanh,
  kExp,
  kLog,
  kNeg,
  kScale,           // c x
  kOneMinus,        // 1 - x
  kSoftmax,
  kLogSoftmax,
  kMaskedSoftmax,
  kConcat,
  kStackRows,
  kMean,            // elementwise mean of several same-shape inputs
  kSum,             // all elements to a scalar
  kDot,
  kPick,            // x[k] as a scalar
  kLookup,          // row k of a matrix
  kSlice,
};

std::string_view op_name(Op op);
std::optional<Op> op_from_name(std::string_view name);

class Graph;

// Lightweight handle to a node of a Graph.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  bool valid() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  std::uint32_t id() const { return id_; }

  const Array& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
  double item() const;
  // Gradient after backward(); empty if the node was not reached.
  const Array& grad() const;

 private:
  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

struct Attributes {
  std::vector<std::size_t> ints;
  double real = 0.0;
};

struct Node {
  Op op = Op::kInput;
  Array value;
  const Array* external_value = nullptr;
  Array grad;
  Array* external_grad = nullptr;
  std::vector<std::uint32_t> parents;
  Attributes attributes;
  bool requires_grad = false;

  const Array& val() const { return external_value ? *external_value : value; }
};

class Graph {
 public:
  // With record_gradients == false no node requires a gradient; used for
  // generation where only forward values matter.
  explicit Graph(bool record_gradients = true) : record_(record_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var input(Array value);
  Var constant(Array value);
  // Binds a parameter; repeated calls return the same node.
  Var param(Parameter& parameter);
  Var param(const Parameter& parameter);

  Var apply(Op op, std::span<const Var> inputs, Attributes attributes = {});

  // root must hold exactly one element. Clears node-local gradients first,
  // then accumulates d(root)/d(node) into every reachable node; parameter
  // gradients are added to the store's buffers.
  void backward(Var root);

  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }
  bool recording() const { return record_; }

 private:
  Var push(Node node);
  Array& grad_of(std::uint32_t id);
  void propagate(std::uint32_t id);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> bound_;
  bool record_;
};

// Primitives. Shapes are checked; mismatches throw an Error naming the
// primitive and the offending shapes.
Var matvec(Var a, Var x);
Var matvec_t(Var a, Var x);
Var matmul_nt(Var h, Var w);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_row_broadcast(Var m, Var v);
Var sigmoid(Var x);
Var tanh(Var x);
Var exp(Var x);
Var log(Var x);
Var neg(Var x);
Var scale(Var x, double c);
Var one_minus(Var x);
Var softmax(Var x);
Var log_softmax(Var x);
// mask[i] != 0 marks a live position; dead positions get probability 0.
Var masked_softmax(Var x, std::span<const std::uint8_t> mask);
Var concat(std::span<const Var> parts);
Var stack_rows(std::span<const Var> rows);
Var mean(std::span<const Var> parts);
Var sum(Var x);
Var dot(Var a, Var b);
Var pick(Var x, std::size_t index);
Var lookup(Var table, std::size_t row);
Var slice(Var x, std::size_t offset, std::size_t length);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

// Test hook: when set, the backward rule of the given primitive is scaled by
// a wrong factor. Used to confirm that gradient checks catch broken rules.
void inject_backward_fault(std::optional<Op> op);

// Five-point central-difference gradient check of fn at point. Returns the maximum over
// coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// Throws if two forward passes at the same point disagree.
using ScalarFn = std::function<Var(Graph&, Var)>;
double grad_check(const ScalarFn& fn, const Array& point, double step = 1e-3);

// Same check applied to every entry of the given parameters; loss builds a
// scalar on a fresh graph. Returns name -> max relative error.
using LossFn = std::function<Var(Graph&)>;
std::map<std::string, double> grad_check_parameters(
    const LossFn& loss, std::span<Parameter* const> parameters,
    double step = 1e-3);

double relative_error(double analytic, double numeric);

}  // namespace acsum::ad

#endif  // ACSUM_AUTODIFF_HPP_
