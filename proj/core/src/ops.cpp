#include <algorithm>
#include <cmath>
#include <string>

#include "hopgat/errors.hpp"
#include "hopgat/rng.hpp"
#include "hopgat/tensor.hpp"

namespace hopgat {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_rank2(const Tensor& a, std::string_view op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

void require_same_tape(Var a, Var b, std::string_view op) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw UsageError(std::string(op) + ": operands are not on the same tape");
  }
}

// Elementwise map; `df` gives the derivative from the input value.
template <typename F, typename DF>
Var unary(std::string_view op, Var x, F f, DF df) {
  Tape& tape = *x.tape();
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return tape.record(op, std::move(out), {x}, [&tape, x, df](const Tensor& g) {
    const Tensor& in = x.value();
    Tensor& gx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < in.size(); ++i) gx[i] += g[i] * df(in[i]);
  });
}

double stable_sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// log(1 + exp(v)) without overflow.
double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank2(A, "matmul");
  require_rank2(B, "matmul");
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ " + shape_string(A.shape()) + " x " +
                         shape_string(B.shape()));
  }
  Tensor C({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* c = &C[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;  // bag-of-words inputs are mostly zeros
      const double* brow = &B[p * n];
      for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
    }
  }
  Tape& tape = *a.tape();
  return tape.record("matmul", std::move(C), {a, b}, [&tape, a, b, m, k, n](const Tensor& g) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (a.requires_grad()) {
      Tensor& ga = tape.grad_buffer(a);  // += g · Bᵀ
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &g[i * n];
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = &B[p * n];
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (b.requires_grad()) {
      Tensor& gb = tape.grad_buffer(b);  // += Aᵀ · g
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &g[i * n];
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          if (av == 0.0) continue;
          double* gbrow = &gb[p * n];
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] + B[i];
  Tape& tape = *a.tape();
  return tape.record("add", std::move(out), {a, b}, [&tape, a, b](const Tensor& g) {
    for (Var v : {a, b}) {
      if (!v.requires_grad()) continue;
      Tensor& gv = tape.grad_buffer(v);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] - B[i];
  Tape& tape = *a.tape();
  return tape.record("sub", std::move(out), {a, b}, [&tape, a, b](const Tensor& g) {
    if (a.requires_grad()) {
      Tensor& ga = tape.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      Tensor& gb = tape.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * B[i];
  Tape& tape = *a.tape();
  return tape.record("mul", std::move(out), {a, b}, [&tape, a, b](const Tensor& g) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (a.requires_grad()) {
      Tensor& ga = tape.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (b.requires_grad()) {
      Tensor& gb = tape.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

Var add_row(Var a, Var row) {
  require_same_tape(a, row, "add_row");
  const Tensor& A = a.value();
  const Tensor& R = row.value();
  require_rank2(A, "add_row");
  const std::size_t m = A.rows(), n = A.cols();
  if (R.size() != n) {
    throw DimensionError("add_row: row " + shape_string(R.shape()) + " does not broadcast over " +
                         shape_string(A.shape()));
  }
  Tensor out(A.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = A[i * n + j] + R[j];
  Tape& tape = *a.tape();
  return tape.record("add_row", std::move(out), {a, row}, [&tape, a, row, m, n](const Tensor& g) {
    if (a.requires_grad()) {
      Tensor& ga = tape.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (row.requires_grad()) {
      Tensor& gr = tape.grad_buffer(row);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
    }
  });
}

Var scale(Var a, double factor) {
  return unary("scale", a, [factor](double v) { return factor * v; },
               [factor](double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary("add_scalar", a, [offset](double v) { return v + offset; }, [](double) { return 1.0; });
}

Var leaky_relu(Var x, double slope) {
  return unary("leaky_relu", x, [slope](double v) { return v > 0 ? v : slope * v; },
               [slope](double v) { return v > 0 ? 1.0 : slope; });
}

Var elu(Var x, double alpha) {
  return unary("elu", x, [alpha](double v) { return v > 0 ? v : alpha * std::expm1(v); },
               [alpha](double v) { return v > 0 ? 1.0 : alpha * std::exp(v); });
}

Var sigmoid(Var x) {
  return unary("sigmoid", x, stable_sigmoid, [](double v) {
    const double s = stable_sigmoid(v);
    return s * (1.0 - s);
  });
}

Var exp(Var x) {
  return unary("exp", x, [](double v) { return std::exp(v); }, [](double v) { return std::exp(v); });
}

Var square(Var x) {
  return unary("square", x, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

Var sum(Var x) {
  const Tensor& in = x.value();
  double s = 0.0;
  for (double v : in.data()) s += v;
  Tape& tape = *x.tape();
  return tape.record("sum", Tensor::scalar(s), {x}, [&tape, x](const Tensor& g) {
    Tensor& gx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts[0].value().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    require_same_tape(parts[0], p, "concat_cols");
    require_rank2(p.value(), "concat_cols");
    if (p.value().rows() != m) throw DimensionError("concat_cols: row counts differ");
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  Tensor out({m, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& P = parts[k].value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * total + offset + j] = P[i * widths[k] + j];
    offset += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  Tape& tape = *parts[0].tape();
  return tape.record("concat_cols", std::move(out), inputs,
                     [&tape, inputs, widths, m, total](const Tensor& g) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < inputs.size(); ++k) {
                         if (inputs[k].requires_grad()) {
                           Tensor& gp = tape.grad_buffer(inputs[k]);
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < widths[k]; ++j)
                               gp[i * widths[k] + j] += g[i * total + offset + j];
                         }
                         offset += widths[k];
                       }
                     });
}

Var average(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("average: no inputs");
  const Tensor& first = parts[0].value();
  Tensor out(first.shape());
  for (Var p : parts) {
    require_same_tape(parts[0], p, "average");
    require_same_shape(first, p.value(), "average");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p.value()[i];
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  for (double& v : out.data()) v *= inv;
  std::vector<Var> inputs(parts.begin(), parts.end());
  Tape& tape = *parts[0].tape();
  return tape.record("average", std::move(out), inputs, [&tape, inputs, inv](const Tensor& g) {
    for (Var p : inputs) {
      if (!p.requires_grad()) continue;
      Tensor& gp = tape.grad_buffer(p);
      for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i] * inv;
    }
  });
}

Var dropout(Var x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const Tensor& in = x.value();
  Tensor mask(in.shape());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * mask[i];
  Tape& tape = *x.tape();
  return tape.record("dropout", std::move(out), {x}, [&tape, x, mask = std::move(mask)](const Tensor& g) {
    Tensor& gx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

Var masked_softmax(Var logits, std::span<const std::uint8_t> mask) {
  const Tensor& in = logits.value();
  if (mask.size() != in.size()) throw DimensionError("masked_softmax: mask size differs from logits");
  const std::size_t rows = in.rows(), cols = in.cols();
  Tensor out(in.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < cols; ++c)
      if (mask[r * cols + c]) mx = std::max(mx, in[r * cols + c]);
    if (mx == -INFINITY) {
      throw UsageError("masked_softmax: row " + std::to_string(r) + " has an empty neighborhood");
    }
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!mask[r * cols + c]) continue;
      const double e = std::exp(in[r * cols + c] - mx);
      out[r * cols + c] = e;
      z += e;
    }
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= z;
  }
  Tape& tape = *logits.tape();
  Tensor saved = out;
  return tape.record("masked_softmax", std::move(out), {logits},
                     [&tape, logits, rows, cols, s = std::move(saved)](const Tensor& g) {
                       Tensor& gx = tape.grad_buffer(logits);
                       for (std::size_t r = 0; r < rows; ++r) {
                         double dot = 0.0;
                         for (std::size_t c = 0; c < cols; ++c) dot += s[r * cols + c] * g[r * cols + c];
                         for (std::size_t c = 0; c < cols; ++c)
                           gx[r * cols + c] += s[r * cols + c] * (g[r * cols + c] - dot);
                       }
                     });
}

Var gather(Var x, std::span<const std::uint32_t> index) {
  const Tensor& in = x.value();
  if (in.rank() == 2 && in.cols() != 1) {
    throw DimensionError("gather: expected a vector or column, got " + shape_string(in.shape()));
  }
  Tensor out({index.size()});
  for (std::size_t p = 0; p < index.size(); ++p) {
    if (index[p] >= in.size()) throw DimensionError("gather: index out of range");
    out[p] = in[index[p]];
  }
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  Tape& tape = *x.tape();
  return tape.record("gather", std::move(out), {x}, [&tape, x, idx = std::move(idx)](const Tensor& g) {
    Tensor& gx = tape.grad_buffer(x);
    for (std::size_t p = 0; p < idx.size(); ++p) gx[idx[p]] += g[p];
  });
}

Var segment_softmax(Var values, std::span<const std::size_t> offsets) {
  const Tensor& in = values.value();
  if (offsets.empty() || offsets.back() != in.size()) {
    throw DimensionError("segment_softmax: offsets do not cover the input");
  }
  Tensor out(in.shape());
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    const std::size_t lo = offsets[s], hi = offsets[s + 1];
    if (lo == hi) throw InternalError("segment_softmax: empty segment " + std::to_string(s));
    double mx = in[lo];
    for (std::size_t p = lo; p < hi; ++p) mx = std::max(mx, in[p]);
    double z = 0.0;
    for (std::size_t p = lo; p < hi; ++p) z += (out[p] = std::exp(in[p] - mx));
    for (std::size_t p = lo; p < hi; ++p) out[p] /= z;
  }
  Tensor saved = out;
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  Tape& tape = *values.tape();
  return tape.record("segment_softmax", std::move(out), {values},
                     [&tape, values, offs = std::move(offs), s = std::move(saved)](const Tensor& g) {
                       Tensor& gx = tape.grad_buffer(values);
                       for (std::size_t seg = 0; seg + 1 < offs.size(); ++seg) {
                         double dot = 0.0;
                         for (std::size_t p = offs[seg]; p < offs[seg + 1]; ++p) dot += s[p] * g[p];
                         for (std::size_t p = offs[seg]; p < offs[seg + 1]; ++p) gx[p] += s[p] * (g[p] - dot);
                       }
                     });
}

Var aggregate(std::span<const std::size_t> offsets, std::span<const std::uint32_t> cols, Var weights,
              Var dense) {
  require_same_tape(weights, dense, "aggregate");
  const Tensor& W = weights.value();
  const Tensor& D = dense.value();
  require_rank2(D, "aggregate");
  if (W.size() != cols.size() || offsets.empty() || offsets.back() != cols.size()) {
    throw DimensionError("aggregate: weights/cols/offsets disagree");
  }
  const std::size_t rows = offsets.size() - 1, f = D.cols();
  Tensor out({rows, f});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
      if (cols[p] >= D.rows()) throw DimensionError("aggregate: column index out of range");
      const double w = W[p];
      const double* src = &D[cols[p] * f];
      for (std::size_t c = 0; c < f; ++c) out[i * f + c] += w * src[c];
    }
  }
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  std::vector<std::uint32_t> idx(cols.begin(), cols.end());
  Tape& tape = *weights.tape();
  return tape.record(
      "aggregate", std::move(out), {weights, dense},
      [&tape, weights, dense, offs = std::move(offs), idx = std::move(idx), f](const Tensor& g) {
        const Tensor& W = weights.value();
        const Tensor& D = dense.value();
        const std::size_t rows = offs.size() - 1;
        if (weights.requires_grad()) {
          Tensor& gw = tape.grad_buffer(weights);
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t p = offs[i]; p < offs[i + 1]; ++p) {
              double acc = 0.0;
              for (std::size_t c = 0; c < f; ++c) acc += g[i * f + c] * D[idx[p] * f + c];
              gw[p] += acc;
            }
        }
        if (dense.requires_grad()) {
          Tensor& gd = tape.grad_buffer(dense);
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t p = offs[i]; p < offs[i + 1]; ++p)
              for (std::size_t c = 0; c < f; ++c) gd[idx[p] * f + c] += W[p] * g[i * f + c];
        }
      });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels, std::span<const std::uint32_t> rows) {
  const Tensor& L = logits.value();
  require_rank2(L, "softmax_cross_entropy");
  if (rows.empty()) throw ConfigError("softmax_cross_entropy: no labelled rows");
  if (labels.size() != L.rows()) throw DimensionError("softmax_cross_entropy: one label per row required");
  const std::size_t c = L.cols();
  // Softmax probabilities of the selected rows, kept for backward.
  Tensor probs({rows.size(), c});
  double loss = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t r = rows[k];
    if (r >= L.rows()) throw DimensionError("softmax_cross_entropy: row out of range");
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= c) throw DimensionError("softmax_cross_entropy: bad label");
    double mx = L[r * c];
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, L[r * c + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (probs[k * c + j] = std::exp(L[r * c + j] - mx));
    for (std::size_t j = 0; j < c; ++j) probs[k * c + j] /= z;
    loss += std::log(z) + mx - L[r * c + y];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  std::vector<std::uint32_t> rs(rows.begin(), rows.end());
  std::vector<int> ys(labels.begin(), labels.end());
  Tape& tape = *logits.tape();
  return tape.record("softmax_cross_entropy", Tensor::scalar(loss * inv), {logits},
                     [&tape, logits, probs = std::move(probs), rs = std::move(rs), ys = std::move(ys), c,
                      inv](const Tensor& g) {
                       Tensor& gl = tape.grad_buffer(logits);
                       for (std::size_t k = 0; k < rs.size(); ++k) {
                         const std::size_t r = rs[k];
                         for (std::size_t j = 0; j < c; ++j) {
                           const double target = static_cast<int>(j) == ys[r] ? 1.0 : 0.0;
                           gl[r * c + j] += g[0] * inv * (probs[k * c + j] - target);
                         }
                       }
                     });
}

Var sigmoid_bce(Var logits, const Tensor& targets, std::span<const std::uint32_t> rows) {
  const Tensor& L = logits.value();
  require_rank2(L, "sigmoid_bce");
  require_same_shape(L, targets, "sigmoid_bce");
  if (rows.empty()) throw ConfigError("sigmoid_bce: no labelled rows");
  const std::size_t c = L.cols();
  double loss = 0.0;
  for (std::uint32_t r : rows) {
    if (r >= L.rows()) throw DimensionError("sigmoid_bce: row out of range");
    for (std::size_t j = 0; j < c; ++j) {
      const double x = L[r * c + j], t = targets[r * c + j];
      // -[t log σ(x) + (1-t) log(1-σ(x))] = softplus(x) - t x
      loss += softplus(x) - t * x;
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size() * c);
  std::vector<std::uint32_t> rs(rows.begin(), rows.end());
  Tape& tape = *logits.tape();
  return tape.record("sigmoid_bce", Tensor::scalar(loss * inv), {logits},
                     [&tape, logits, targets, rs = std::move(rs), c, inv](const Tensor& g) {
                       const Tensor& L = logits.value();
                       Tensor& gl = tape.grad_buffer(logits);
                       for (std::uint32_t r : rs)
                         for (std::size_t j = 0; j < c; ++j)
                           gl[r * c + j] += g[0] * inv * (stable_sigmoid(L[r * c + j]) - targets[r * c + j]);
                     });
}

}  // namespace hopgat
