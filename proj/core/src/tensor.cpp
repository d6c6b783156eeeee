#include "hopgat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hopgat/errors.hpp"

namespace hopgat {

namespace {

std::size_t shape_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

}  // namespace

// ---- Tensor -------------------------------------------------------------

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  data_.assign(shape_product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
  }
}

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return Tensor({rows, cols}, std::move(v));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

void Parameter::zero_grad() {
  grad = Tensor(value.shape());
  has_grad = false;
}

// ---- Var / Tape ---------------------------------------------------------

const Tensor& Var::value() const {
  if (!tape_) throw UsageError("Var: unbound handle");
  return tape_->value(*this);
}

double Var::item() const {
  const Tensor& v = value();
  if (v.size() != 1) throw DimensionError("item(): tensor is not a scalar: " + shape_string(v.shape()));
  return v[0];
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(*this); }

Var Tape::make(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite input");
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  return make(std::move(n));
}

Var Tape::leaf(Parameter& param) {
  if (!param.value.all_finite()) throw NumericError("parameter '" + param.name + "' is not finite");
  Node n;
  n.op = "leaf";
  n.value = param.value;
  n.requires_grad = true;
  n.param = &param;
  return make(std::move(n));
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op) + ": produced a non-finite value");
  }
  Node n;
  n.op = std::string(op);
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw UsageError(std::string(op) + ": input belongs to another tape");
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return make(std::move(n));
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_.at(v.id_);
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

const Tensor* Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id_);
  return n.has_grad ? &n.grad : nullptr;
}

void Tape::backward(Var out) {
  if (value(out).size() != 1) throw UsageError("backward(): output must be a scalar");
  backward(out, Tensor(value(out).shape(), 1.0));
}

void Tape::backward(Var out, const Tensor& seed) {
  if (swept_) throw UsageError("backward(): tape already swept");
  swept_ = true;
  require_same_shape(value(out), seed, "backward");
  Tensor& g0 = grad_buffer(out);
  for (std::size_t i = 0; i < seed.size(); ++i) g0[i] += seed[i];

  for (std::size_t id = out.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) n.backward(n.grad);
  }
  for (Node& n : nodes_) {
    if (!n.param || !n.has_grad) continue;
    Parameter& p = *n.param;
    if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
    for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
    p.has_grad = true;
  }
}

}  // namespace hopgat
