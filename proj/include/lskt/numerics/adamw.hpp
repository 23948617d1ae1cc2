#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "lskt/numerics/parameter_store.hpp"

namespace lskt {

struct AdamWOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct OptimizerState {
    std::map<std::string, Tensor> first_moment;
    std::map<std::string, Tensor> second_moment;
    std::uint64_t step = 0;

    void save(const std::filesystem::path& dir) const;
    static OptimizerState load(const std::filesystem::path& dir);
};

// Decoupled weight decay Adam: p ← p·(1 − lr·wd) − lr·m̂/(√v̂ + eps).
// Moments are created lazily (zero) per trainable parameter. Gradients are
// left untouched; the caller zeroes them.
void adamw_step(ParameterStore& store, OptimizerState& state, const AdamWOptions& opts);

} // namespace lskt
