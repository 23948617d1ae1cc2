#include "lskt/lse.hpp"

#include <cmath>

#include "lskt/numerics/errors.hpp"

namespace lskt {

namespace lse {
std::string direction(int block) { return "lse.block" + std::to_string(block) + ".direction"; }
std::string magnitude(int block) { return "lse.block" + std::to_string(block) + ".magnitude"; }
std::string conv_bias(int block) { return "lse.block" + std::to_string(block) + ".bias"; }
std::string norm_gain(int norm) { return "lse.norm" + std::to_string(norm) + ".gain"; }
std::string norm_bias(int norm) { return "lse.norm" + std::to_string(norm) + ".bias"; }

std::vector<std::string> parameter_names() {
    std::vector<std::string> names;
    for (int b = 1; b <= 3; ++b) names.insert(names.end(), {direction(b), magnitude(b), conv_bias(b)});
    for (int n = 1; n <= 2; ++n) names.insert(names.end(), {norm_gain(n), norm_bias(n)});
    names.insert(names.end(), {fusion_weight, fusion_bias});
    return names;
}
} // namespace lse

void add_lse_parameters(ParameterStore& store, const LseConfig& config, Rng& rng) {
    const std::size_t D = config.dim, M = config.kernel_size;
    if (M == 0 || D == 0) throw ConfigError("LSE needs kernel size and dimension >= 1");
    const double conv_bound = 1.0 / std::sqrt(static_cast<double>(M * D));
    for (int b = 1; b <= 3; ++b) {
        Tensor dir({M, D, D});
        double sq = 0.0;
        for (double& v : dir.data()) {
            v = rng.uniform(-conv_bound, conv_bound);
            sq += v * v;
        }
        store.add(lse::direction(b), std::move(dir));
        // Start with magnitude = ||direction|| so the effective kernel equals
        // the sampled direction.
        store.add(lse::magnitude(b), Tensor::scalar(std::sqrt(sq)));
        store.add(lse::conv_bias(b), Tensor({D}, 0.0));
    }
    for (int n = 1; n <= 2; ++n) {
        store.add(lse::norm_gain(n), Tensor({D}, 1.0));
        store.add(lse::norm_bias(n), Tensor({D}, 0.0));
    }
    const double fusion_bound = 1.0 / std::sqrt(3.0 * static_cast<double>(D));
    Tensor fusion({3 * D, D});
    for (double& v : fusion.data()) v = rng.uniform(-fusion_bound, fusion_bound);
    store.add(lse::fusion_weight, std::move(fusion));
    store.add(lse::fusion_bias, Tensor({D}, 0.0));
}

Var residual_block(Graph& g, ParameterStore& store, int block, const Var& y, std::size_t dilation, double dropout_rate,
                   bool train_mode, Rng* rng) {
    Var kernel = weight_norm(g.param(store, lse::direction(block)), g.param(store, lse::magnitude(block)));
    Var conv = add_row(causal_conv1d(y, kernel, dilation), g.param(store, lse::conv_bias(block)));
    return add(y, dropout(relu(conv), dropout_rate, train_mode, rng));
}

Var lse_forward(Graph& g, ParameterStore& store, const LseConfig& config, const Var& y, bool train_mode, Rng* rng) {
    if (y.value().rank() != 2 || y.value().dim(0) == 0) {
        throw ContractError("lse_forward expects a non-empty [L,D] sequence, got " + shape_to_string(y.shape()));
    }
    Var b1 = residual_block(g, store, 1, y, config.dilations[0], config.dropout, train_mode, rng);
    Var n1 = layer_norm(b1, g.param(store, lse::norm_gain(1)), g.param(store, lse::norm_bias(1)));
    Var b2 = residual_block(g, store, 2, n1, config.dilations[1], config.dropout, train_mode, rng);
    Var n2 = layer_norm(b2, g.param(store, lse::norm_gain(2)), g.param(store, lse::norm_bias(2)));
    Var b3 = residual_block(g, store, 3, n2, config.dilations[2], config.dropout, train_mode, rng);
    Var stacked = concat_last(concat_last(b1, b2), b3);
    return linear(stacked, g.param(store, lse::fusion_weight), g.param(store, lse::fusion_bias));
}

} // namespace lskt
