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

#include "acsum/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "acsum/error.hpp"

namespace acsum::ad {
namespace {

std::atomic<int> g_fault_op{-1};

double fault_factor(Op op) {
  return g_fault_op.load(std::memory_order_relaxed) == static_cast<int>(op)
             ? 1.5
             : 1.0;
}

std::size_t product(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

[[noreturn]] void shape_error(Op op, std::span<const Var> inputs,
                              const std::string& detail = "") {
  std::ostringstream out;
  out << op_name(op) << ": incompatible input shapes";
  for (const Var& v : inputs) out << ' ' << shape_string(v.shape());
  if (!detail.empty()) out << " (" << detail << ')';
  fail(ErrorKind::kInvalidArgument, out.str());
}

void require(bool ok, Op op, std::span<const Var> inputs,
             const std::string& detail = "") {
  if (!ok) shape_error(op, inputs, detail);
}

bool is_vector(const Var& v) { return v.shape().size() == 1; }
bool is_matrix(const Var& v) { return v.shape().size() == 2; }

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Array::Array(Shape s, double fill) : shape(std::move(s)), data(product(shape), fill) {}

Array Array::vector(std::vector<double> values) {
  Array a;
  a.shape = {values.size()};
  a.data = std::move(values);
  return a;
}

Array Array::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) {
    fail(ErrorKind::kInvalidArgument, "Array::matrix: value count does not match shape");
  }
  Array a;
  a.shape = {rows, cols};
  a.data = std::move(values);
  return a;
}

bool Array::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// ParameterStore

Parameter& ParameterStore::add(const std::string& name, Shape shape) {
  if (entries_.contains(name)) {
    fail(ErrorKind::kInvalidArgument, "duplicate parameter name: " + name);
  }
  Parameter p;
  p.name = name;
  p.value = Array(shape);
  p.grad = Array(shape);
  p.first_moment = Array(shape);
  p.second_moment = Array(shape);
  return entries_.emplace(name, std::move(p)).first->second;
}

Parameter& ParameterStore::get(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    fail(ErrorKind::kInvalidArgument, "unknown parameter: " + std::string(name));
  }
  return it->second;
}

const Parameter& ParameterStore::get(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    fail(ErrorKind::kInvalidArgument, "unknown parameter: " + std::string(name));
  }
  return it->second;
}

bool ParameterStore::contains(std::string_view name) const {
  return entries_.find(name) != entries_.end();
}

std::vector<Parameter*> ParameterStore::group(std::string_view prefix) {
  std::vector<Parameter*> out;
  for (auto& [name, p] : entries_) {
    if (name.starts_with(prefix)) out.push_back(&p);
  }
  return out;
}

std::vector<const Parameter*> ParameterStore::group(std::string_view prefix) const {
  std::vector<const Parameter*> out;
  for (const auto& [name, p] : entries_) {
    if (name.starts_with(prefix)) out.push_back(&p);
  }
  return out;
}

void ParameterStore::zero_gradients(std::string_view prefix) {
  for (Parameter* p : group(prefix)) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
}

void ParameterStore::initialize_uniform(Rng& rng, double scale, std::string_view prefix) {
  for (Parameter* p : group(prefix)) {
    for (double& v : p->value.data) v = rng.uniform(-scale, scale);
  }
}

// ---------------------------------------------------------------------------
// Op names

namespace {
constexpr std::pair<Op, std::string_view> kOpNames[] = {
    {Op::kInput, "input"},
    {Op::kConstant, "constant"},
    {Op::kParameter, "parameter"},
    {Op::kMatVec, "matvec"},
    {Op::kMatTVec, "matvec_t"},
    {Op::kMatMulNT, "matmul_nt"},
    {Op::kAdd, "add"},
    {Op::kSub, "sub"},
    {Op::kMul, "mul"},
    {Op::kAddRowBroadcast, "add_row_broadcast"},
    {Op::kSigmoid, "sigmoid"},
    {Op::kTanh, "tanh"},
    {Op::kExp, "exp"},
    {Op::kLog, "log"},
    {Op::kNeg, "neg"},
    {Op::kScale, "scale"},
    {Op::kOneMinus, "one_minus"},
    {Op::kSoftmax, "softmax"},
    {Op::kLogSoftmax, "log_softmax"},
    {Op::kMaskedSoftmax, "masked_softmax"},
    {Op::kConcat, "concat"},
    {Op::kStackRows, "stack_rows"},
    {Op::kMean, "mean"},
    {Op::kSum, "sum"},
    {Op::kDot, "dot"},
    {Op::kPick, "pick"},
    {Op::kLookup, "lookup"},
    {Op::kSlice, "slice"},
};
}  // namespace

std::string_view op_name(Op op) {
  for (const auto& [o, name] : kOpNames) {
    if (o == op) return name;
  }
  return "unknown";
}

std::optional<Op> op_from_name(std::string_view name) {
  for (const auto& [o, n] : kOpNames) {
    if (n == name) return o;
  }
  return std::nullopt;
}

void inject_backward_fault(std::optional<Op> op) {
  g_fault_op.store(op ? static_cast<int>(*op) : -1);
}

// ---------------------------------------------------------------------------
// Var

const Array& Var::value() const { return graph_->node(id_).val(); }

double Var::item() const {
  const Array& v = value();
  if (v.size() != 1) {
    fail(ErrorKind::kInvalidArgument,
         "item() on non-scalar of shape " + shape_string(v.shape));
  }
  return v[0];
}

const Array& Var::grad() const {
  const Node& n = graph_->node(id_);
  return n.external_grad ? *n.external_grad : n.grad;
}

// ---------------------------------------------------------------------------
// Graph

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::input(Array value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  n.requires_grad = record_;
  return push(std::move(n));
}

Var Graph::constant(Array value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::param(Parameter& parameter) {
  if (auto it = bound_.find(&parameter); it != bound_.end()) return Var(this, it->second);
  Node n;
  n.op = Op::kParameter;
  n.external_value = &parameter.value;
  n.external_grad = record_ ? &parameter.grad : nullptr;
  n.requires_grad = record_;
  Var v = push(std::move(n));
  bound_.emplace(&parameter, v.id());
  return v;
}

Var Graph::param(const Parameter& parameter) {
  // Read-only binding: usable on non-recording graphs, or as a constant.
  if (auto it = bound_.find(&parameter); it != bound_.end()) return Var(this, it->second);
  Node n;
  n.op = Op::kParameter;
  n.external_value = &parameter.value;
  Var v = push(std::move(n));
  bound_.emplace(&parameter, v.id());
  return v;
}

Var Graph::apply(Op op, std::span<const Var> in, Attributes attr) {
  for (const Var& v : in) {
    if (v.graph() != this) {
      fail(ErrorKind::kInvalidArgument,
           std::string(op_name(op)) + ": input belongs to a different graph");
    }
  }
  auto arity = [&](std::size_t n) {
    require(in.size() == n, op, in, "expected " + std::to_string(n) + " inputs");
  };

  Array out;
  switch (op) {
    case Op::kMatVec: {
      arity(2);
      const Array& a = in[0].value();
      const Array& x = in[1].value();
      require(is_matrix(in[0]) && is_vector(in[1]) && a.cols() == x.size(), op, in);
      const std::size_t r = a.rows(), c = a.cols();
      out = Array({r});
      for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        const double* row = a.data.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) s += row[j] * x[j];
        out[i] = s;
      }
      break;
    }
    case Op::kMatTVec: {
      arity(2);
      const Array& a = in[0].value();
      const Array& x = in[1].value();
      require(is_matrix(in[0]) && is_vector(in[1]) && a.rows() == x.size(), op, in);
      const std::size_t r = a.rows(), c = a.cols();
      out = Array({c});
      for (std::size_t i = 0; i < r; ++i) {
        const double* row = a.data.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) out[j] += row[j] * x[i];
      }
      break;
    }
    case Op::kMatMulNT: {
      arity(2);
      const Array& h = in[0].value();
      const Array& w = in[1].value();
      require(is_matrix(in[0]) && is_matrix(in[1]) && h.cols() == w.cols(), op, in);
      const std::size_t m = h.rows(), r = w.rows(), c = h.cols();
      out = Array({m, r});
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < r; ++k) {
          double s = 0.0;
          for (std::size_t j = 0; j < c; ++j) s += h.data[i * c + j] * w.data[k * c + j];
          out.data[i * r + k] = s;
        }
      }
      break;
    }
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul: {
      arity(2);
      const Array& a = in[0].value();
      const Array& b = in[1].value();
      require(a.shape == b.shape, op, in);
      out = Array(a.shape);
      for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = op == Op::kAdd ? a[i] + b[i] : op == Op::kSub ? a[i] - b[i] : a[i] * b[i];
      }
      break;
    }
    case Op::kAddRowBroadcast: {
      arity(2);
      const Array& m = in[0].value();
      const Array& v = in[1].value();
      require(is_matrix(in[0]) && is_vector(in[1]) && m.cols() == v.size(), op, in);
      out = m;
      const std::size_t c = m.cols();
      for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] += v[j];
      }
      break;
    }
    case Op::kSigmoid:
    case Op::kTanh:
    case Op::kExp:
    case Op::kLog:
    case Op::kNeg:
    case Op::kScale:
    case Op::kOneMinus: {
      arity(1);
      out = in[0].value();
      for (double& v : out.data) {
        switch (op) {
          case Op::kSigmoid:
            v = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
            break;
          case Op::kTanh: v = std::tanh(v); break;
          case Op::kExp: v = std::exp(v); break;
          case Op::kLog: v = std::log(v); break;
          case Op::kNeg: v = -v; break;
          case Op::kScale: v *= attr.real; break;
          default: v = 1.0 - v; break;
        }
      }
      break;
    }
    case Op::kSoftmax:
    case Op::kLogSoftmax:
    case Op::kMaskedSoftmax: {
      arity(1);
      const Array& x = in[0].value();
      require(is_vector(in[0]) && x.size() > 0, op, in);
      std::vector<std::uint8_t> live(x.size(), 1);
      if (op == Op::kMaskedSoftmax) {
        require(attr.ints.size() == x.size(), op, in, "mask length mismatch");
        bool any = false;
        for (std::size_t i = 0; i < x.size(); ++i) {
          live[i] = attr.ints[i] != 0;
          any = any || live[i];
        }
        if (!any) fail(ErrorKind::kInvalidArgument, "masked_softmax: every position is masked");
      }
      double hi = -INFINITY;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (live[i]) hi = std::max(hi, x[i]);
      }
      double z = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (live[i]) z += std::exp(x[i] - hi);
      }
      out = Array(x.shape);
      if (op == Op::kLogSoftmax) {
        const double lse = hi + std::log(z);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
      } else {
        for (std::size_t i = 0; i < x.size(); ++i) {
          out[i] = live[i] ? std::exp(x[i] - hi) / z : 0.0;
        }
      }
      break;
    }
    case Op::kConcat: {
      require(!in.empty(), op, in);
      std::size_t total = 0;
      for (const Var& v : in) {
        require(is_vector(v), op, in);
        total += v.size();
      }
      out = Array({total});
      std::size_t at = 0;
      for (const Var& v : in) {
        std::copy(v.value().data.begin(), v.value().data.end(), out.data.begin() + at);
        at += v.size();
      }
      break;
    }
    case Op::kStackRows: {
      require(!in.empty(), op, in);
      const std::size_t c = in[0].size();
      for (const Var& v : in) require(is_vector(v) && v.size() == c, op, in);
      out = Array({in.size(), c});
      for (std::size_t i = 0; i < in.size(); ++i) {
        std::copy(in[i].value().data.begin(), in[i].value().data.end(), out.data.begin() + i * c);
      }
      break;
    }
    case Op::kMean: {
      require(!in.empty(), op, in);
      for (const Var& v : in) require(v.shape() == in[0].shape(), op, in);
      out = Array(in[0].shape());
      for (const Var& v : in) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += v.value()[i];
      }
      const double k = static_cast<double>(in.size());
      for (double& v : out.data) v /= k;
      break;
    }
    case Op::kSum: {
      arity(1);
      double s = 0.0;
      for (double v : in[0].value().data) s += v;
      out = Array::scalar(s);
      break;
    }
    case Op::kDot: {
      arity(2);
      require(is_vector(in[0]) && in[0].shape() == in[1].shape(), op, in);
      double s = 0.0;
      for (std::size_t i = 0; i < in[0].size(); ++i) s += in[0].value()[i] * in[1].value()[i];
      out = Array::scalar(s);
      break;
    }
    case Op::kPick: {
      arity(1);
      require(attr.ints.size() == 1 && attr.ints[0] < in[0].size(), op, in,
              "index out of range");
      out = Array::scalar(in[0].value()[attr.ints[0]]);
      break;
    }
    case Op::kLookup: {
      arity(1);
      const Array& t = in[0].value();
      require(is_matrix(in[0]) && attr.ints.size() == 1 && attr.ints[0] < t.rows(), op, in,
              "row out of range");
      const std::size_t c = t.cols();
      out = Array({c});
      std::copy_n(t.data.begin() + attr.ints[0] * c, c, out.data.begin());
      break;
    }
    case Op::kSlice: {
      arity(1);
      require(is_vector(in[0]) && attr.ints.size() == 2 &&
                  attr.ints[0] + attr.ints[1] <= in[0].size(),
              op, in, "slice out of range");
      out = Array({attr.ints[1]});
      std::copy_n(in[0].value().data.begin() + attr.ints[0], attr.ints[1], out.data.begin());
      break;
    }
    default:
      fail(ErrorKind::kInvalidArgument,
           std::string(op_name(op)) + ": not an applicable primitive");
  }

  Node n;
  n.op = op;
  n.value = std::move(out);
  n.attributes = std::move(attr);
  if (record_) {
    for (const Var& v : in) n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
    if (n.requires_grad) {
      n.parents.reserve(in.size());
      for (const Var& v : in) n.parents.push_back(v.id());
    }
  }
  return push(std::move(n));
}

Array& Graph::grad_of(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.external_grad) return *n.external_grad;
  if (n.grad.data.empty()) n.grad = Array(n.val().shape);
  return n.grad;
}

void Graph::backward(Var root) {
  if (root.graph() != this) fail(ErrorKind::kInvalidArgument, "backward: root from another graph");
  const Node& r = nodes_[root.id()];
  if (r.val().size() != 1) {
    fail(ErrorKind::kInvalidArgument,
         "backward: root must be scalar, got shape " + shape_string(r.val().shape));
  }
  for (std::uint32_t i = 0; i <= root.id(); ++i) {
    if (!nodes_[i].external_grad) nodes_[i].grad = Array();
  }
  if (!r.requires_grad) return;
  grad_of(root.id())[0] += 1.0;
  for (std::uint32_t i = root.id() + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (!n.requires_grad || n.parents.empty() || n.grad.data.empty()) continue;
    propagate(i);
  }
}

void Graph::propagate(std::uint32_t id) {
  const Node& n = nodes_[id];
  const Array& g = n.grad;
  const Array& y = n.value;
  const double f = fault_factor(n.op);
  auto wants = [&](std::size_t k) { return nodes_[n.parents[k]].requires_grad; };
  auto in = [&](std::size_t k) -> const Array& { return nodes_[n.parents[k]].val(); };

  switch (n.op) {
    case Op::kMatVec: {
      const Array& a = in(0);
      const Array& x = in(1);
      const std::size_t r = a.rows(), c = a.cols();
      if (wants(0)) {
        Array& ga = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < r; ++i) {
          const double gi = f * g[i];
          double* row = ga.data.data() + i * c;
          for (std::size_t j = 0; j < c; ++j) row[j] += gi * x[j];
        }
      }
      if (wants(1)) {
        Array& gx = grad_of(n.parents[1]);
        for (std::size_t i = 0; i < r; ++i) {
          const double gi = f * g[i];
          const double* row = a.data.data() + i * c;
          for (std::size_t j = 0; j < c; ++j) gx[j] += row[j] * gi;
        }
      }
      break;
    }
    case Op::kMatTVec: {
      const Array& a = in(0);
      const Array& x = in(1);
      const std::size_t r = a.rows(), c = a.cols();
      if (wants(0)) {
        Array& ga = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < r; ++i) {
          double* row = ga.data.data() + i * c;
          for (std::size_t j = 0; j < c; ++j) row[j] += f * x[i] * g[j];
        }
      }
      if (wants(1)) {
        Array& gx = grad_of(n.parents[1]);
        for (std::size_t i = 0; i < r; ++i) {
          const double* row = a.data.data() + i * c;
          double s = 0.0;
          for (std::size_t j = 0; j < c; ++j) s += row[j] * g[j];
          gx[i] += f * s;
        }
      }
      break;
    }
    case Op::kMatMulNT: {
      const Array& h = in(0);
      const Array& w = in(1);
      const std::size_t m = h.rows(), r = w.rows(), c = h.cols();
      if (wants(0)) {
        Array& gh = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t k = 0; k < r; ++k) {
            const double gik = f * g.data[i * r + k];
            for (std::size_t j = 0; j < c; ++j) gh.data[i * c + j] += gik * w.data[k * c + j];
          }
        }
      }
      if (wants(1)) {
        Array& gw = grad_of(n.parents[1]);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t k = 0; k < r; ++k) {
            const double gik = f * g.data[i * r + k];
            for (std::size_t j = 0; j < c; ++j) gw.data[k * c + j] += gik * h.data[i * c + j];
          }
        }
      }
      break;
    }
    case Op::kAdd:
    case Op::kSub: {
      if (wants(0)) {
        Array& ga = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += f * g[i];
      }
      if (wants(1)) {
        Array& gb = grad_of(n.parents[1]);
        const double sign = n.op == Op::kAdd ? 1.0 : -1.0;
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * f * g[i];
      }
      break;
    }
    case Op::kMul: {
      const Array& a = in(0);
      const Array& b = in(1);
      if (wants(0)) {
        Array& ga = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += f * g[i] * b[i];
      }
      if (wants(1)) {
        Array& gb = grad_of(n.parents[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += f * g[i] * a[i];
      }
      break;
    }
    case Op::kAddRowBroadcast: {
      const std::size_t c = y.cols();
      if (wants(0)) {
        Array& gm = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gm[i] += f * g[i];
      }
      if (wants(1)) {
        Array& gv = grad_of(n.parents[1]);
        for (std::size_t i = 0; i < y.rows(); ++i) {
          for (std::size_t j = 0; j < c; ++j) gv[j] += f * g.data[i * c + j];
        }
      }
      break;
    }
    case Op::kSigmoid:
    case Op::kTanh:
    case Op::kExp:
    case Op::kLog:
    case Op::kNeg:
    case Op::kScale:
    case Op::kOneMinus: {
      if (!wants(0)) break;
      const Array& x = in(0);
      Array& gx = grad_of(n.parents[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        double d;
        switch (n.op) {
          case Op::kSigmoid: d = y[i] * (1.0 - y[i]); break;
          case Op::kTanh: d = 1.0 - y[i] * y[i]; break;
          case Op::kExp: d = y[i]; break;
          case Op::kLog: d = 1.0 / x[i]; break;
          case Op::kNeg: d = -1.0; break;
          case Op::kScale: d = n.attributes.real; break;
          default: d = -1.0; break;
        }
        gx[i] += f * g[i] * d;
      }
      break;
    }
    case Op::kSoftmax:
    case Op::kMaskedSoftmax: {
      if (!wants(0)) break;
      Array& gx = grad_of(n.parents[0]);
      double inner = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * y[i];
      // Dead positions have y == 0 and so receive no gradient.
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += f * y[i] * (g[i] - inner);
      break;
    }
    case Op::kLogSoftmax: {
      if (!wants(0)) break;
      Array& gx = grad_of(n.parents[0]);
      double total = 0.0;
      for (double v : g.data) total += v;
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += f * (g[i] - std::exp(y[i]) * total);
      break;
    }
    case Op::kConcat: {
      std::size_t at = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        const std::size_t len = in(k).size();
        if (wants(k)) {
          Array& gp = grad_of(n.parents[k]);
          for (std::size_t i = 0; i < len; ++i) gp[i] += f * g[at + i];
        }
        at += len;
      }
      break;
    }
    case Op::kStackRows: {
      const std::size_t c = y.cols();
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        if (!wants(k)) continue;
        Array& gp = grad_of(n.parents[k]);
        for (std::size_t j = 0; j < c; ++j) gp[j] += f * g.data[k * c + j];
      }
      break;
    }
    case Op::kMean: {
      const double k = static_cast<double>(n.parents.size());
      for (std::size_t p = 0; p < n.parents.size(); ++p) {
        if (!wants(p)) continue;
        Array& gp = grad_of(n.parents[p]);
        for (std::size_t i = 0; i < g.size(); ++i) gp[i] += f * g[i] / k;
      }
      break;
    }
    case Op::kSum: {
      if (!wants(0)) break;
      Array& gx = grad_of(n.parents[0]);
      for (double& v : gx.data) v += f * g[0];
      break;
    }
    case Op::kDot: {
      const Array& a = in(0);
      const Array& b = in(1);
      if (wants(0)) {
        Array& ga = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < a.size(); ++i) ga[i] += f * g[0] * b[i];
      }
      if (wants(1)) {
        Array& gb = grad_of(n.parents[1]);
        for (std::size_t i = 0; i < b.size(); ++i) gb[i] += f * g[0] * a[i];
      }
      break;
    }
    case Op::kPick: {
      if (wants(0)) grad_of(n.parents[0])[n.attributes.ints[0]] += f * g[0];
      break;
    }
    case Op::kLookup: {
      if (!wants(0)) break;
      Array& gt = grad_of(n.parents[0]);
      const std::size_t c = y.size();
      const std::size_t row = n.attributes.ints[0];
      for (std::size_t j = 0; j < c; ++j) gt.data[row * c + j] += f * g[j];
      break;
    }
    case Op::kSlice: {
      if (!wants(0)) break;
      Array& gx = grad_of(n.parents[0]);
      const std::size_t off = n.attributes.ints[0];
      for (std::size_t i = 0; i < g.size(); ++i) gx[off + i] += f * g[i];
      break;
    }
    default:
      break;
  }
}

// ---------------------------------------------------------------------------
// Primitive wrappers

namespace {
Var apply2(Op op, Var a, Var b, Attributes attr = {}) {
  const Var in[] = {a, b};
  return a.graph()->apply(op, in, std::move(attr));
}
Var apply1(Op op, Var a, Attributes attr = {}) {
  const Var in[] = {a};
  return a.graph()->apply(op, in, std::move(attr));
}
Graph* graph_of(std::span<const Var> parts, Op op) {
  if (parts.empty() || !parts[0].valid()) {
    fail(ErrorKind::kInvalidArgument, std::string(op_name(op)) + ": no inputs");
  }
  return parts[0].graph();
}
}  // namespace

Var matvec(Var a, Var x) { return apply2(Op::kMatVec, a, x); }
Var matvec_t(Var a, Var x) { return apply2(Op::kMatTVec, a, x); }
Var matmul_nt(Var h, Var w) { return apply2(Op::kMatMulNT, h, w); }
Var add(Var a, Var b) { return apply2(Op::kAdd, a, b); }
Var sub(Var a, Var b) { return apply2(Op::kSub, a, b); }
Var mul(Var a, Var b) { return apply2(Op::kMul, a, b); }
Var add_row_broadcast(Var m, Var v) { return apply2(Op::kAddRowBroadcast, m, v); }
Var sigmoid(Var x) { return apply1(Op::kSigmoid, x); }
Var tanh(Var x) { return apply1(Op::kTanh, x); }
Var exp(Var x) { return apply1(Op::kExp, x); }
Var log(Var x) { return apply1(Op::kLog, x); }
Var neg(Var x) { return apply1(Op::kNeg, x); }
Var scale(Var x, double c) { return apply1(Op::kScale, x, {{}, c}); }
Var one_minus(Var x) { return apply1(Op::kOneMinus, x); }
Var softmax(Var x) { return apply1(Op::kSoftmax, x); }
Var log_softmax(Var x) { return apply1(Op::kLogSoftmax, x); }

Var masked_softmax(Var x, std::span<const std::uint8_t> mask) {
  Attributes attr;
  attr.ints.assign(mask.begin(), mask.end());
  return apply1(Op::kMaskedSoftmax, x, std::move(attr));
}

Var concat(std::span<const Var> parts) {
  return graph_of(parts, Op::kConcat)->apply(Op::kConcat, parts);
}
Var stack_rows(std::span<const Var> rows) {
  return graph_of(rows, Op::kStackRows)->apply(Op::kStackRows, rows);
}
Var mean(std::span<const Var> parts) {
  return graph_of(parts, Op::kMean)->apply(Op::kMean, parts);
}
Var sum(Var x) { return apply1(Op::kSum, x); }
Var dot(Var a, Var b) { return apply2(Op::kDot, a, b); }
Var pick(Var x, std::size_t index) { return apply1(Op::kPick, x, {{index}, 0.0}); }
Var lookup(Var table, std::size_t row) { return apply1(Op::kLookup, table, {{row}, 0.0}); }
Var slice(Var x, std::size_t offset, std::size_t length) {
  return apply1(Op::kSlice, x, {{offset, length}, 0.0});
}

// ---------------------------------------------------------------------------
// Gradient checking

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

// Five-point central difference of eval() in the coordinate x.
template <typename Eval>
double central_difference(const Eval& eval, double& x, double step) {
  const double orig = x;
  double f[4];
  const double offsets[4] = {-2.0, -1.0, 1.0, 2.0};
  for (int k = 0; k < 4; ++k) {
    x = orig + offsets[k] * step;
    f[k] = eval();
  }
  x = orig;
  return (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * step);
}

}  // namespace

double grad_check(const ScalarFn& fn, const Array& point, double step) {
  if (!(step > 0.0)) fail(ErrorKind::kInvalidArgument, "grad_check: step must be positive");
  auto evaluate = [&](const Array& at) {
    Graph g(false);
    return fn(g, g.input(at)).item();
  };

  Graph g;
  Var x = g.input(point);
  Var y = fn(g, x);
  const double f0 = y.item();
  g.backward(y);
  Array analytic = x.grad().data.empty() ? Array(point.shape) : x.grad();

  if (evaluate(point) != f0) {
    fail(ErrorKind::kInvalidArgument, "grad_check: function is not deterministic");
  }

  double worst = 0.0;
  Array probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double numeric = central_difference([&] { return evaluate(probe); }, probe[i], step);
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  return worst;
}

std::map<std::string, double> grad_check_parameters(
    const LossFn& loss, std::span<Parameter* const> parameters, double step) {
  if (!(step > 0.0)) fail(ErrorKind::kInvalidArgument, "grad_check: step must be positive");
  auto evaluate = [&] {
    Graph g(false);
    return loss(g).item();
  };

  std::vector<Array> saved;
  saved.reserve(parameters.size());
  for (Parameter* p : parameters) {
    saved.push_back(p->grad);
    std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
  }
  Graph g;
  Var root = loss(g);
  const double f0 = root.item();
  g.backward(root);
  std::vector<Array> analytic;
  for (std::size_t k = 0; k < parameters.size(); ++k) {
    analytic.push_back(parameters[k]->grad);
    parameters[k]->grad = saved[k];
  }
  if (evaluate() != f0) {
    fail(ErrorKind::kInvalidArgument, "grad_check: loss is not deterministic");
  }

  std::map<std::string, double> report;
  for (std::size_t k = 0; k < parameters.size(); ++k) {
    Parameter& p = *parameters[k];
    double worst = 0.0;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double numeric = central_difference(evaluate, p.value[i], step);
      worst = std::max(worst, relative_error(analytic[k][i], numeric));
    }
    report[p.name] = worst;
  }
  return report;
}

}  // namespace acsum::ad
