#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lure/core/param_vector.hpp"
#include "lure/core/real_array.hpp"

namespace lure::ad {

class Graph;

// Handle to a node in a Graph. Cheap to copy; only valid while its graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const RealArray& value() const;
  double scalar() const;
};

// Reverse-mode tape over matrix-valued nodes. A graph is built per evaluation
// and discarded, so independent graphs can be used from different threads.
class Graph {
 public:
  Var constant(RealArray value);
  Var variable(RealArray value);

  const RealArray& value(Var v) const { return nodes_[v.id].value; }
  // Gradient of the last backward() root with respect to `v`; zeros if unreached.
  RealArray gradient(Var v) const;
  // `root` must hold exactly one element.
  void backward(Var root);

  Var matmul(Var a, Var b);
  // Adds a length-cols bias to every row.
  Var add_bias(Var a, Var bias);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  // Row r multiplied by the constant factors[r].
  Var scale_rows(Var a, std::span<const double> factors);
  Var silu(Var a);
  Var abs(Var a);
  Var sqrt(Var a);
  Var square(Var a);
  // Values below `floor` are replaced by it and pass no gradient.
  Var clamp_min(Var a, double floor);
  Var concat_cols(std::span<const Var> parts);
  Var gather_rows(Var table, std::span<const std::size_t> rows);
  Var row_sum(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var log_softmax(Var logits);
  // out[r] = a(r, cols[r]) as an n x 1 column.
  Var pick(Var a, std::span<const std::size_t> cols);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  using Backprop = std::function<void(Graph&, std::size_t)>;
  struct Node {
    RealArray value;
    RealArray grad;
    bool requires_grad = false;
    Backprop backprop;
  };

  Var push(RealArray value, bool requires_grad, Backprop backprop);
  bool tracks(Var v) const { return nodes_[v.id].requires_grad; }
  RealArray& grad_of(std::size_t id);
  const RealArray& upstream(std::size_t id) const { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator*(double s, Var a);

}  // namespace lure::ad

namespace lure {

// Variables bound to each segment of a ParamVector for one graph evaluation.
class ParamBinding {
 public:
  ParamBinding(ad::Graph& graph, const ParamVector& params, bool track);

  ad::Var operator[](std::size_t segment) const { return vars_[segment]; }
  ad::Var operator[](const std::string& name) const;
  const ParamVector& params() const { return *params_; }
  std::span<const ad::Var> vars() const { return vars_; }

 private:
  const ParamVector* params_;
  std::vector<ad::Var> vars_;
};

// A scalar loss written against bound parameters. Must be reentrant.
using LossFn = std::function<ad::Var(ad::Graph&, const ParamBinding&)>;

struct ValueAndGrad {
  double value = 0.0;
  ParamVector gradient;
};

// Loss value only (no gradient tracking).
double evaluate(const LossFn& loss, const ParamVector& params);
ValueAndGrad value_and_grad(const LossFn& loss, const ParamVector& params);
ParamVector grad(const LossFn& loss, const ParamVector& params);

}  // namespace lure
