#pragma once

// Finite-difference cases for every op and for the full training loss of
// each attention kind. Shared by the unit tests and the acceptance binary.

#include <memory>
#include <string>
#include <vector>

#include "hopgat/attention.hpp"
#include "hopgat/metrics.hpp"
#include "hopgat/schedule.hpp"
#include "hopgat/supervision.hpp"
#include "oracles.hpp"

namespace gradient_suite {

using namespace hopgat;

struct Case {
  std::string name;
  std::vector<std::shared_ptr<Parameter>> owned;
  std::shared_ptr<Model> model;
  std::vector<Parameter*> params;
  oracle::ScalarFn fn;
};

// Reduces any op output to a scalar with fixed random weights so every
// output entry receives a distinct upstream gradient.
inline Var project(Tape& tape, Var out, const Tensor& weights) {
  return sum(mul(out, tape.constant(weights)));
}

class Builder {
 public:
  explicit Builder(std::uint64_t seed) : rng_(seed) {}

  Parameter* param(Case& c, const std::string& name, Shape shape, double lo = -1.0, double hi = 1.0) {
    auto p = std::make_shared<Parameter>(name, oracle::random_tensor(std::move(shape), rng_, lo, hi));
    c.owned.push_back(p);
    c.params.push_back(p.get());
    return p.get();
  }
  Tensor weights(Shape shape) { return oracle::random_tensor(std::move(shape), rng_); }
  Rng& rng() { return rng_; }

 private:
  Rng rng_;
};

inline Case unary_case(std::uint64_t seed, const std::string& name, Var (*op)(Var), double lo = -1.0, double hi = 1.0) {
  Builder b(seed);
  Case c{name};
  Parameter* x = b.param(c, "x", {3, 4}, lo, hi);
  const Tensor w = b.weights({3, 4});
  c.fn = [x, w, op](Tape& t) { return project(t, op(t.leaf(*x)), w); };
  return c;
}

inline std::vector<Case> op_cases(std::uint64_t seed) {
  std::vector<Case> cases;
  {
    Builder b(seed);
    Case c{"matmul"};
    Parameter* a = b.param(c, "a", {3, 4});
    Parameter* m = b.param(c, "b", {4, 2});
    const Tensor w = b.weights({3, 2});
    c.fn = [=](Tape& t) { return project(t, matmul(t.leaf(*a), t.leaf(*m)), w); };
    cases.push_back(std::move(c));
  }
  for (const char* which : {"add", "sub", "mul"}) {
    Builder b(seed);
    Case c{which};
    Parameter* x = b.param(c, "x", {3, 2});
    Parameter* y = b.param(c, "y", {3, 2});
    const Tensor w = b.weights({3, 2});
    const std::string op = which;
    c.fn = [=](Tape& t) {
      const Var u = t.leaf(*x), v = t.leaf(*y);
      return project(t, op == "add" ? add(u, v) : op == "sub" ? sub(u, v) : mul(u, v), w);
    };
    cases.push_back(std::move(c));
  }
  {
    Builder b(seed);
    Case c{"add_row"};
    Parameter* x = b.param(c, "x", {3, 4});
    Parameter* r = b.param(c, "row", {1, 4});
    const Tensor w = b.weights({3, 4});
    c.fn = [=](Tape& t) { return project(t, add_row(t.leaf(*x), t.leaf(*r)), w); };
    cases.push_back(std::move(c));
  }
  {
    Builder b(seed);
    Case c{"scale+add_scalar"};
    Parameter* x = b.param(c, "x", {2, 3});
    const Tensor w = b.weights({2, 3});
    c.fn = [=](Tape& t) { return project(t, add_scalar(scale(t.leaf(*x), -1.7), 0.3), w); };
    cases.push_back(std::move(c));
  }
  cases.push_back(unary_case(seed, "leaky_relu", [](Var x) { return leaky_relu(x, 0.2); }));
  cases.push_back(unary_case(seed, "elu", [](Var x) { return elu(x); }));
  cases.push_back(unary_case(seed, "sigmoid", [](Var x) { return sigmoid(x); }, -4.0, 4.0));
  cases.push_back(unary_case(seed, "exp", [](Var x) { return hopgat::exp(x); }));
  cases.push_back(unary_case(seed, "square", [](Var x) { return square(x); }));
  {
    Builder b(seed);
    Case c{"sum+mean"};
    Parameter* x = b.param(c, "x", {3, 3});
    c.fn = [=](Tape& t) {
      const Var v = t.leaf(*x);
      return add(scale(sum(square(v)), 0.5), mean(v));
    };
    cases.push_back(std::move(c));
  }
  for (const char* which : {"concat_cols", "average"}) {
    Builder b(seed);
    Case c{which};
    Parameter* p0 = b.param(c, "p0", {3, 2});
    Parameter* p1 = b.param(c, "p1", {3, 2});
    Parameter* p2 = b.param(c, "p2", {3, 2});
    const bool concat = std::string(which) == "concat_cols";
    const Tensor w = b.weights(concat ? Shape{3, 6} : Shape{3, 2});
    c.fn = [=](Tape& t) {
      const std::vector<Var> parts{t.leaf(*p0), t.leaf(*p1), t.leaf(*p2)};
      return project(t, concat ? concat_cols(parts) : average(parts), w);
    };
    cases.push_back(std::move(c));
  }
  {
    Builder b(seed);
    Case c{"dropout"};
    Parameter* x = b.param(c, "x", {4, 5});
    const Tensor w = b.weights({4, 5});
    const std::uint64_t mask_seed = b.rng().next();
    c.fn = [=](Tape& t) {
      Rng r(mask_seed);  // same mask on every evaluation
      return project(t, dropout(t.leaf(*x), 0.4, r, true), w);
    };
    cases.push_back(std::move(c));
  }
  {
    Builder b(seed);
    Case c{"masked_softmax"};
    Parameter* x = b.param(c, "x", {3, 4}, -2.0, 2.0);
    const Tensor w = b.weights({3, 4});
    auto mask = std::make_shared<std::vector<std::uint8_t>>(12, 0);
    for (std::size_t r = 0; r < 3; ++r) {
      (*mask)[r * 4 + b.rng().below(4)] = 1;
      for (std::size_t k = 0; k < 4; ++k)
        if (b.rng().uniform() < 0.5) (*mask)[r * 4 + k] = 1;
    }
    c.fn = [=](Tape& t) { return project(t, masked_softmax(t.leaf(*x), *mask), w); };
    cases.push_back(std::move(c));
  }
  {
    Builder b(seed);
    Case c{"gather"};
    Parameter* x = b.param(c, "x", {5, 1});
    const std::vector<std::uint32_t> idx{0, 3, 3, 4, 1, 0, 2};
    const Tensor w = b.weights({idx.size()});
    c.fn = [=](Tape& t) { return project(t, gather(t.leaf(*x), idx), w); };
    cases.push_back(std::move(c));
  }
  {
    Builder b(seed);
    Case c{"segment_softmax"};
    Parameter* x = b.param(c, "x", {7}, -2.0, 2.0);
    const std::vector<std::size_t> offsets{0, 3, 4, 7};
    const Tensor w = b.weights({7});
    c.fn = [=](Tape& t) { return project(t, segment_softmax(t.leaf(*x), offsets), w); };
    cases.push_back(std::move(c));
  }
  {
    Builder b(seed);
    Case c{"aggregate"};
    Parameter* weights = b.param(c, "weights", {6});
    Parameter* dense = b.param(c, "dense", {4, 3});
    const std::vector<std::size_t> offsets{0, 2, 2, 5, 6};
    const std::vector<std::uint32_t> cols{1, 3, 0, 1, 2, 3};
    const Tensor w = b.weights({4, 3});
    c.fn = [=](Tape& t) { return project(t, aggregate(offsets, cols, t.leaf(*weights), t.leaf(*dense)), w); };
    cases.push_back(std::move(c));
  }
  {
    Builder b(seed);
    Case c{"softmax_cross_entropy"};
    Parameter* x = b.param(c, "logits", {5, 3}, -2.0, 2.0);
    std::vector<int> labels(5);
    for (int& y : labels) y = static_cast<int>(b.rng().below(3));
    const std::vector<std::uint32_t> rows{0, 2, 3};
    c.fn = [=](Tape& t) { return softmax_cross_entropy(t.leaf(*x), labels, rows); };
    cases.push_back(std::move(c));
  }
  {
    Builder b(seed);
    Case c{"sigmoid_bce"};
    Parameter* x = b.param(c, "logits", {4, 3}, -3.0, 3.0);
    Tensor targets({4, 3});
    for (double& v : targets.data()) v = b.rng().uniform() < 0.5 ? 1.0 : 0.0;
    const std::vector<std::uint32_t> rows{1, 2, 3};
    c.fn = [=](Tape& t) { return sigmoid_bce(t.leaf(*x), targets, rows); };
    cases.push_back(std::move(c));
  }
  return cases;
}

// The whole objective of one training step: dropout, attention, supervision
// on near and sampled far pairs, annealed mixing and L2.
inline Case model_case(std::uint64_t seed, AttentionKind kind, std::size_t layers) {
  Rng rng(seed);
  auto graph = std::make_shared<Graph>(oracle::random_graph(rng, 12, 0.25, 3, 2));
  std::vector<std::size_t> heads = layers == 2 ? std::vector<std::size_t>{2, 1} : std::vector<std::size_t>{2, 2, 1};
  std::vector<std::size_t> widths = layers == 2 ? std::vector<std::size_t>{3, 2} : std::vector<std::size_t>{3, 3, 2};
  ModelConfig mc = ModelConfig::stack(3, heads, widths, kind, 0.1, 0.1, 0.1, 2);
  Case c{"model/" + std::string(to_string(kind)) + "/" + std::to_string(layers) + "-layer"};
  c.model = std::make_shared<Model>(mc, Rng::mix(seed, 1));
  // Non-zero biases so every term is exercised away from its initial values.
  for (Parameter* p : c.model->parameters()) {
    if (p->name.find("/b_") != std::string::npos) p->value[0] = rng.uniform(-0.5, 0.5);
    c.params.push_back(p);
  }
  auto ctx = std::make_shared<GraphContext>(GraphContext::build(*graph, mc));
  const PairSample sample = PairSampler(ctx->hops, 0.3).sample(Rng::mix(seed, 2));
  const std::uint64_t drop_seed = Rng::mix(seed, 3);
  auto model = c.model;
  c.fn = [=](Tape& t) {
    Rng drop(drop_seed);
    const ModelOutput out = model->forward(t, *ctx, true, drop);
    const Var cls = classification_loss(out.scores, *graph, graph->visible);
    const std::vector<HeadScores> fields = collect_fields(out);
    const Var att = attention_loss(fields, sample, 2);
    Var total = total_loss(cls, att, 0.4);
    for (Parameter* w : model->weight_matrices()) total = total + scale(sum(square(t.leaf(*w))), 1e-3);
    return total;
  };
  return c;
}

inline std::vector<Case> model_cases(std::uint64_t seed) {
  return {model_case(seed, AttentionKind::baseline, 2), model_case(seed, AttentionKind::product, 2),
          model_case(seed, AttentionKind::addition, 2), model_case(seed, AttentionKind::addition, 3)};
}

}  // namespace gradient_suite
