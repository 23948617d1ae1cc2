#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "lskt/numerics/graph.hpp"
#include "lskt/numerics/ops.hpp"
#include "lskt/numerics/rng.hpp"

namespace lskt {

// Learning-state extraction: three causal residual blocks at growing
// dilation, layer norm between adjacent blocks, and a 1×1 fusion over the
// concatenated block outputs.
struct LseConfig {
    std::size_t dim = 128;
    std::size_t kernel_size = 3;
    std::array<std::size_t, 3> dilations{1, 2, 4};
    double dropout = 0.2;
};

namespace lse {
// block is 1-based.
std::string direction(int block);   // [M,D,D]
std::string magnitude(int block);   // scalar
std::string conv_bias(int block);   // [D]
// norm is 1-based; norms sit after blocks 1 and 2.
std::string norm_gain(int norm);
std::string norm_bias(int norm);
inline const std::string fusion_weight = "lse.fusion.weight";  // [3D,D]
inline const std::string fusion_bias = "lse.fusion.bias";      // [D]
std::vector<std::string> parameter_names();
} // namespace lse

void add_lse_parameters(ParameterStore& store, const LseConfig& config, Rng& rng);

// y + dropout(relu(causal_conv1d(y, weight_norm(kernel), dilation) + bias)).
Var residual_block(Graph& g, ParameterStore& store, int block, const Var& y, std::size_t dilation, double dropout,
                   bool train_mode, Rng* rng);

// ŷ for every step, [L,D]; ŷ[t] depends only on y[0..t].
Var lse_forward(Graph& g, ParameterStore& store, const LseConfig& config, const Var& y, bool train_mode, Rng* rng);

} // namespace lskt
