#include "lure/diffusion/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lure/core/errors.hpp"

namespace lure {
namespace {

double silu(double x) {
  return x >= 0 ? x / (1.0 + std::exp(-x)) : x * std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

std::size_t MlpArch::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < num_layers(); ++l) n += layer_in(l) * layer_out(l) + layer_out(l);
  return n;
}

std::size_t MlpArch::widest() const {
  std::size_t w = std::max(input_dim, output_dim);
  for (auto h : hidden) w = std::max(w, h);
  return w;
}

std::string weight_name(std::size_t layer) { return "l" + std::to_string(layer) + ".weight"; }
std::string bias_name(std::size_t layer) { return "l" + std::to_string(layer) + ".bias"; }

void add_mlp_params(ParamVector& params, const MlpArch& arch, SeededRng& rng, bool zero_output) {
  if (arch.input_dim == 0 || arch.output_dim == 0) throw InvalidArgument("MLP dims must be positive");
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const std::size_t in = arch.layer_in(l), out = arch.layer_out(l);
    const auto w = params.add_segment(weight_name(l), {in, out});
    params.add_segment(bias_name(l), {out});
    if (zero_output && l + 1 == arch.num_layers()) continue;
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : params.segment(w)) v = scale * rng.normal();
  }
}

void mlp_forward(const MlpArch& arch, const ParamVector& params, std::span<const double> input,
                 std::span<double> output) {
  if (input.size() != arch.input_dim || output.size() != arch.output_dim)
    throw InvalidArgument("mlp_forward: input/output size mismatch");
  thread_local std::vector<double> a, b;
  const std::size_t w = arch.widest();
  a.assign(input.begin(), input.end());
  a.resize(w);
  b.resize(w);
  const auto& layout = params.layout();
  std::size_t seg = layout.size() - 2 * arch.num_layers();  // MLP segments come last
  for (std::size_t l = 0; l < arch.num_layers(); ++l, seg += 2) {
    const std::size_t in = arch.layer_in(l), out = arch.layer_out(l);
    const auto W = params.segment(seg);
    const auto bias = params.segment(seg + 1);
    std::copy(bias.begin(), bias.end(), b.begin());
    for (std::size_t i = 0; i < in; ++i) {
      const double x = a[i];
      const double* row = W.data() + i * out;
      for (std::size_t j = 0; j < out; ++j) b[j] += x * row[j];
    }
    const bool last = l + 1 == arch.num_layers();
    for (std::size_t j = 0; j < out; ++j) a[j] = last ? b[j] : silu(b[j]);
  }
  std::copy_n(a.begin(), arch.output_dim, output.begin());
}

ad::Var mlp_forward(ad::Graph& g, const MlpArch& arch, const ParamBinding& params, ad::Var input) {
  ad::Var h = input;
  const std::size_t first = params.params().layout().size() - 2 * arch.num_layers();
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    h = g.add_bias(g.matmul(h, params[first + 2 * l]), params[first + 2 * l + 1]);
    if (l + 1 < arch.num_layers()) h = g.silu(h);
  }
  return h;
}

void time_embedding(int t, int time_steps, std::span<double> out) {
  if (out.size() % 2 != 0 || out.empty()) throw InvalidArgument("time embedding dim must be even");
  const std::size_t half = out.size() / 2;
  const double clock = static_cast<double>(t) / static_cast<double>(time_steps);
  for (std::size_t k = 0; k < half; ++k) {
    const double angle = clock * (std::numbers::pi / 2.0) * std::ldexp(1.0, static_cast<int>(k));
    out[k] = std::sin(angle);
    out[half + k] = std::cos(angle);
  }
}

}  // namespace lure
