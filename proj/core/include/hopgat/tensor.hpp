#pragma once

// Dense float64 tensors and a reverse-mode gradient tape.
//
// A Tape owns every intermediate value of one forward pass. Ops append a
// record holding the output value and a closure that pushes the output
// gradient back into the inputs. Records are appended in evaluation order, so
// the tape is always topologically sorted and backward() is a single reverse
// sweep. Parameters live outside the tape; Tape::leaf() binds one into the
// graph and backward() accumulates into Parameter::grad.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hopgat {

class Rng;

using Shape = std::vector<std::size_t>;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({}, std::vector<double>{v}); }
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  // Rank-2 tensors are rows×cols, everything else is viewed as one row.
  std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return shape_.size() == 2 ? shape_[1] : data_.size(); }

  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const double& at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool all_finite() const;
  void fill(double v);
  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::string shape_string(const Shape& shape);

// A trainable tensor that outlives individual tapes.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool has_grad = false;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {}
  void zero_grad();
};

class Tape;

// Handle to a value recorded on a tape. Cheap to copy; only valid while the
// tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  double item() const;
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var leaf(Parameter& param);

  // Appends an op record. Throws NumericError if `value` is not finite.
  // `backward` is skipped when no input requires a gradient.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  const Tensor& value(Var v) const { return nodes_.at(v.id_).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id_).requires_grad; }

  // Gradient buffer of `v`, zero-initialised on first access. Backward
  // closures accumulate into it.
  Tensor& grad_buffer(Var v);
  // Null when nothing has flowed into `v`.
  const Tensor* grad(Var v) const;

  // Reverse sweep from a scalar output. Each tape supports one sweep.
  void backward(Var out);
  void backward(Var out, const Tensor& seed);

  std::size_t size() const { return nodes_.size(); }
  std::string_view op_name(std::size_t id) const { return nodes_.at(id).op; }

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  Var make(Node node);

  std::deque<Node> nodes_;
  bool swept_ = false;
};

// ---- ops ----------------------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// a (m×n) plus a 1×n (or rank-1 n) row broadcast over every row.
Var add_row(Var a, Var row);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

Var leaky_relu(Var x, double slope);
Var elu(Var x, double alpha = 1.0);
Var sigmoid(Var x);
Var exp(Var x);
Var square(Var x);

Var sum(Var x);
Var mean(Var x);
Var concat_cols(std::span<const Var> parts);
// Elementwise mean of same-shaped tensors.
Var average(std::span<const Var> parts);

// Inverted dropout. Identity in eval mode or at rate 0.
Var dropout(Var x, double rate, Rng& rng, bool training);

// Softmax over the positions where mask != 0, zero elsewhere. Rank-2 input is
// normalised row by row with a mask of the same size.
Var masked_softmax(Var logits, std::span<const std::uint8_t> mask);

// Picks entries of a vector (or n×1 column) by index into a rank-1 result.
Var gather(Var x, std::span<const std::uint32_t> index);

// Softmax within each segment [offsets[s], offsets[s+1]) of a rank-1 vector.
Var segment_softmax(Var values, std::span<const std::size_t> offsets);

// Sparse-dense product: out[i] = sum_p weights[p] * dense[cols[p]] for p in
// row i's segment of `offsets`.
Var aggregate(std::span<const std::size_t> offsets, std::span<const std::uint32_t> cols,
              Var weights, Var dense);

// Mean softmax cross-entropy over `rows` of a logits matrix.
Var softmax_cross_entropy(Var logits, std::span<const int> labels,
                          std::span<const std::uint32_t> rows);

// Mean per-label sigmoid binary cross-entropy over `rows` and all columns.
Var sigmoid_bce(Var logits, const Tensor& targets, std::span<const std::uint32_t> rows);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace hopgat
