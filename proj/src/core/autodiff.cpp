#include "lure/core/autodiff.hpp"

#include <cmath>
#include <limits>

#include "lure/core/errors.hpp"

namespace lure::ad {
namespace {

void require_same_shape(const RealArray& a, const RealArray& b, const char* op) {
  if (a.shape() != b.shape()) throw InvalidArgument(std::string(op) + ": shape mismatch");
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const RealArray& Var::value() const { return graph->value(*this); }

double Var::scalar() const {
  const auto& v = value();
  if (v.size() != 1) throw InvalidArgument("Var::scalar on non-scalar node");
  return v[0];
}

Var Graph::push(RealArray value, bool requires_grad, Backprop backprop) {
  nodes_.push_back({std::move(value), RealArray{}, requires_grad, std::move(backprop)});
  return Var{this, nodes_.size() - 1};
}

Var Graph::constant(RealArray value) { return push(std::move(value), false, nullptr); }
Var Graph::variable(RealArray value) { return push(std::move(value), true, nullptr); }

RealArray& Graph::grad_of(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = RealArray(n.value.shape(), 0.0);
  return n.grad;
}

RealArray Graph::gradient(Var v) const {
  const auto& n = nodes_[v.id];
  if (n.grad.size() == 0) return RealArray(n.value.shape(), 0.0);
  return n.grad;
}

void Graph::backward(Var root) {
  if (nodes_[root.id].value.size() != 1) throw InvalidArgument("backward: root is not scalar");
  for (auto& n : nodes_) n.grad = RealArray{};
  if (!nodes_[root.id].requires_grad) return;
  grad_of(root.id)[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || !n.backprop || n.grad.size() == 0) continue;
    n.backprop(*this, i);
  }
}

Var Graph::matmul(Var a, Var b) {
  RealArray out = lure::matmul(value(a), value(b));
  const bool rg = tracks(a) || tracks(b);
  return push(std::move(out), rg, [a, b](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    if (g.tracks(a)) {
      auto d = lure::matmul(up, g.value(b).transposed());
      auto& ga = g.grad_of(a.id);
      for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i];
    }
    if (g.tracks(b)) {
      auto d = lure::matmul(g.value(a).transposed(), up);
      auto& gb = g.grad_of(b.id);
      for (std::size_t i = 0; i < d.size(); ++i) gb[i] += d[i];
    }
  });
}

Var Graph::add_bias(Var a, Var bias) {
  const RealArray& av = value(a);
  const RealArray& bv = value(bias);
  if (bv.size() != av.cols()) throw InvalidArgument("add_bias: bias length != cols");
  RealArray out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  return push(std::move(out), tracks(a) || tracks(bias), [a, bias](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    if (g.tracks(a)) {
      auto& ga = g.grad_of(a.id);
      for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i];
    }
    if (g.tracks(bias)) {
      auto& gb = g.grad_of(bias.id);
      for (std::size_t r = 0; r < up.rows(); ++r)
        for (std::size_t c = 0; c < up.cols(); ++c) gb[c] += up(r, c);
    }
  });
}

Var Graph::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  RealArray out = value(a);
  const RealArray& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return push(std::move(out), tracks(a) || tracks(b), [a, b](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    for (Var v : {a, b}) {
      if (!g.tracks(v)) continue;
      auto& gv = g.grad_of(v.id);
      for (std::size_t i = 0; i < up.size(); ++i) gv[i] += up[i];
    }
  });
}

Var Graph::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  RealArray out = value(a);
  const RealArray& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return push(std::move(out), tracks(a) || tracks(b), [a, b](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    if (g.tracks(a)) {
      auto& ga = g.grad_of(a.id);
      for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i];
    }
    if (g.tracks(b)) {
      auto& gb = g.grad_of(b.id);
      for (std::size_t i = 0; i < up.size(); ++i) gb[i] -= up[i];
    }
  });
}

Var Graph::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  RealArray out = value(a);
  const RealArray& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return push(std::move(out), tracks(a) || tracks(b), [a, b](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    if (g.tracks(a)) {
      const RealArray& bv = g.value(b);
      auto& ga = g.grad_of(a.id);
      for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * bv[i];
    }
    if (g.tracks(b)) {
      const RealArray& av = g.value(a);
      auto& gb = g.grad_of(b.id);
      for (std::size_t i = 0; i < up.size(); ++i) gb[i] += up[i] * av[i];
    }
  });
}

Var Graph::div(Var a, Var b) {
  require_same_shape(value(a), value(b), "div");
  RealArray out = value(a);
  const RealArray& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= bv[i];
  return push(std::move(out), tracks(a) || tracks(b), [a, b](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    const RealArray& bv = g.value(b);
    if (g.tracks(a)) {
      auto& ga = g.grad_of(a.id);
      for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] / bv[i];
    }
    if (g.tracks(b)) {
      const RealArray& av = g.value(a);
      auto& gb = g.grad_of(b.id);
      for (std::size_t i = 0; i < up.size(); ++i) gb[i] -= up[i] * av[i] / (bv[i] * bv[i]);
    }
  });
}

Var Graph::scale(Var a, double s) {
  RealArray out = value(a);
  for (double& v : out.values()) v *= s;
  return push(std::move(out), tracks(a), [a, s](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    auto& ga = g.grad_of(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += s * up[i];
  });
}

Var Graph::add_scalar(Var a, double s) {
  RealArray out = value(a);
  for (double& v : out.values()) v += s;
  return push(std::move(out), tracks(a), [a](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    auto& ga = g.grad_of(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i];
  });
}

Var Graph::scale_rows(Var a, std::span<const double> factors) {
  RealArray out = value(a);
  if (factors.size() != out.rows()) throw InvalidArgument("scale_rows: factor count != rows");
  std::vector<double> f(factors.begin(), factors.end());
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= f[r];
  return push(std::move(out), tracks(a), [a, f = std::move(f)](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    auto& ga = g.grad_of(a.id);
    for (std::size_t r = 0; r < up.rows(); ++r)
      for (std::size_t c = 0; c < up.cols(); ++c) ga(r, c) += f[r] * up(r, c);
  });
}

Var Graph::silu(Var a) {
  RealArray out = value(a);
  for (double& v : out.values()) v = v * sigmoid(v);
  return push(std::move(out), tracks(a), [a](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    const RealArray& x = g.value(a);
    auto& ga = g.grad_of(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) {
      const double s = sigmoid(x[i]);
      ga[i] += up[i] * (s + x[i] * s * (1.0 - s));
    }
  });
}

Var Graph::abs(Var a) {
  RealArray out = value(a);
  for (double& v : out.values()) v = std::abs(v);
  return push(std::move(out), tracks(a), [a](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    const RealArray& x = g.value(a);
    auto& ga = g.grad_of(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) {
      const double sign = x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0);
      ga[i] += up[i] * sign;
    }
  });
}

Var Graph::sqrt(Var a) {
  RealArray out = value(a);
  for (double& v : out.values()) v = std::sqrt(v);
  return push(std::move(out), tracks(a), [a](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    const RealArray& y = g.value(Var{&g, self});
    auto& ga = g.grad_of(a.id);
    for (std::size_t i = 0; i < up.size(); ++i)
      if (y[i] > 0) ga[i] += up[i] * 0.5 / y[i];
  });
}

Var Graph::square(Var a) {
  RealArray out = value(a);
  for (double& v : out.values()) v = v * v;
  return push(std::move(out), tracks(a), [a](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    const RealArray& x = g.value(a);
    auto& ga = g.grad_of(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += 2.0 * x[i] * up[i];
  });
}

Var Graph::clamp_min(Var a, double floor) {
  RealArray out = value(a);
  for (double& v : out.values()) v = v < floor ? floor : v;
  return push(std::move(out), tracks(a), [a, floor](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    const RealArray& x = g.value(a);
    auto& ga = g.grad_of(a.id);
    for (std::size_t i = 0; i < up.size(); ++i)
      if (x[i] >= floor) ga[i] += up[i];
  });
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("concat_cols: no parts");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  bool rg = false;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw InvalidArgument("concat_cols: row mismatch");
    cols += value(p).cols();
    rg = rg || tracks(p);
  }
  RealArray out = RealArray::matrix(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const RealArray& pv = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offset + c) = pv(r, c);
    offset += pv.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), rg, [ps = std::move(ps)](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    std::size_t offset = 0;
    for (Var p : ps) {
      const std::size_t pc = g.value(p).cols();
      if (g.tracks(p)) {
        auto& gp = g.grad_of(p.id);
        for (std::size_t r = 0; r < up.rows(); ++r)
          for (std::size_t c = 0; c < pc; ++c) gp(r, c) += up(r, offset + c);
      }
      offset += pc;
    }
  });
}

Var Graph::gather_rows(Var table, std::span<const std::size_t> rows) {
  const RealArray& tv = value(table);
  RealArray out = RealArray::matrix(rows.size(), tv.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= tv.rows()) throw InvalidArgument("gather_rows: index out of range");
    for (std::size_t c = 0; c < tv.cols(); ++c) out(r, c) = tv(rows[r], c);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return push(std::move(out), tracks(table),
              [table, idx = std::move(idx)](Graph& g, std::size_t self) {
                const RealArray& up = g.upstream(self);
                auto& gt = g.grad_of(table.id);
                for (std::size_t r = 0; r < idx.size(); ++r)
                  for (std::size_t c = 0; c < up.cols(); ++c) gt(idx[r], c) += up(r, c);
              });
}

Var Graph::row_sum(Var a) {
  const RealArray& av = value(a);
  RealArray out = RealArray::matrix(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < av.cols(); ++c) s += av(r, c);
    out[r] = s;
  }
  return push(std::move(out), tracks(a), [a](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    auto& ga = g.grad_of(a.id);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += up[r];
  });
}

Var Graph::sum(Var a) {
  double s = 0.0;
  for (double v : value(a).values()) s += v;
  return push(RealArray({1}, s), tracks(a), [a](Graph& g, std::size_t self) {
    const double up = g.upstream(self)[0];
    auto& ga = g.grad_of(a.id);
    for (double& v : ga.values()) v += up;
  });
}

Var Graph::mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(value(a).size())); }

Var Graph::log_softmax(Var logits) {
  const RealArray& lv = value(logits);
  RealArray out = lv;
  for (std::size_t r = 0; r < lv.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : lv.row(r)) mx = std::max(mx, v);
    double s = 0.0;
    for (double v : lv.row(r)) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    for (double& v : out.row(r)) v -= lse;
  }
  return push(std::move(out), tracks(logits), [logits](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    const RealArray& y = g.value(Var{&g, self});
    auto& gl = g.grad_of(logits.id);
    for (std::size_t r = 0; r < up.rows(); ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < up.cols(); ++c) total += up(r, c);
      for (std::size_t c = 0; c < up.cols(); ++c) gl(r, c) += up(r, c) - std::exp(y(r, c)) * total;
    }
  });
}

Var Graph::pick(Var a, std::span<const std::size_t> cols) {
  const RealArray& av = value(a);
  if (cols.size() != av.rows()) throw InvalidArgument("pick: one column index per row");
  RealArray out = RealArray::matrix(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    if (cols[r] >= av.cols()) throw InvalidArgument("pick: column out of range");
    out[r] = av(r, cols[r]);
  }
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  return push(std::move(out), tracks(a), [a, idx = std::move(idx)](Graph& g, std::size_t self) {
    const RealArray& up = g.upstream(self);
    auto& ga = g.grad_of(a.id);
    for (std::size_t r = 0; r < idx.size(); ++r) ga(r, idx[r]) += up[r];
  });
}

Var operator+(Var a, Var b) { return a.graph->add(a, b); }
Var operator-(Var a, Var b) { return a.graph->sub(a, b); }
Var operator*(Var a, Var b) { return a.graph->mul(a, b); }
Var operator/(Var a, Var b) { return a.graph->div(a, b); }
Var operator*(double s, Var a) { return a.graph->scale(a, s); }

}  // namespace lure::ad

namespace lure {

ParamBinding::ParamBinding(ad::Graph& graph, const ParamVector& params, bool track)
    : params_(&params) {
  vars_.reserve(params.layout().size());
  for (std::size_t i = 0; i < params.layout().size(); ++i) {
    RealArray v = params.segment_array(i);
    vars_.push_back(track ? graph.variable(std::move(v)) : graph.constant(std::move(v)));
  }
}

ad::Var ParamBinding::operator[](const std::string& name) const {
  return vars_[params_->segment_index(name)];
}

namespace {

double checked_value(ad::Var v) {
  const double value = v.scalar();
  if (!std::isfinite(value)) throw NumericFailure("loss evaluated to a non-finite value");
  return value;
}

}  // namespace

double evaluate(const LossFn& loss, const ParamVector& params) {
  ad::Graph g;
  ParamBinding bound(g, params, false);
  return checked_value(loss(g, bound));
}

ValueAndGrad value_and_grad(const LossFn& loss, const ParamVector& params) {
  ad::Graph g;
  ParamBinding bound(g, params, true);
  ad::Var root = loss(g, bound);
  ValueAndGrad out{checked_value(root), params.zeros_like()};
  g.backward(root);
  for (std::size_t i = 0; i < params.layout().size(); ++i) {
    const RealArray gi = g.gradient(bound[i]);
    auto dst = out.gradient.segment(i);
    std::copy(gi.values().begin(), gi.values().end(), dst.begin());
  }
  return out;
}

ParamVector grad(const LossFn& loss, const ParamVector& params) {
  return value_and_grad(loss, params).gradient;
}

}  // namespace lure
