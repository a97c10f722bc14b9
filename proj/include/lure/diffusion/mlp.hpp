#pragma once

#include <span>
#include <string>
#include <vector>

#include "lure/core/autodiff.hpp"
#include "lure/core/param_vector.hpp"
#include "lure/core/rng.hpp"

namespace lure {

// Fully connected network with SiLU hidden activations and a linear output.
struct MlpArch {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 0;

  std::size_t num_layers() const { return hidden.size() + 1; }
  std::size_t layer_in(std::size_t l) const { return l == 0 ? input_dim : hidden[l - 1]; }
  std::size_t layer_out(std::size_t l) const { return l == hidden.size() ? output_dim : hidden[l]; }
  std::size_t parameter_count() const;
  std::size_t widest() const;
};

std::string weight_name(std::size_t layer);
std::string bias_name(std::size_t layer);

// Appends the layer segments ("l<i>.weight" as in x out, "l<i>.bias") to
// `params`, Gaussian-initialized with variance 1/fan_in. The output layer is
// zero-initialized when zero_output is set.
void add_mlp_params(ParamVector& params, const MlpArch& arch, SeededRng& rng, bool zero_output);

// Plain forward pass for one input row.
void mlp_forward(const MlpArch& arch, const ParamVector& params, std::span<const double> input,
                 std::span<double> output);

// Forward pass over a batch (rows of `input`) recorded on a graph.
ad::Var mlp_forward(ad::Graph& g, const MlpArch& arch, const ParamBinding& params, ad::Var input);

// Sinusoidal embedding of t on the normalized clock t / T; `out.size()` must be
// even. Frequencies double per pair, starting at a quarter turn over [0, T].
void time_embedding(int t, int time_steps, std::span<double> out);

}  // namespace lure
