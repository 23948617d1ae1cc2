#include "lskt/numerics/adamw.hpp"

#include <cmath>

#include "lskt/numerics/errors.hpp"
#include "lskt/numerics/tensor_io.hpp"

namespace lskt {

void adamw_step(ParameterStore& store, OptimizerState& state, const AdamWOptions& opts) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(opts.beta1, t);
    const double bias2 = 1.0 - std::pow(opts.beta2, t);
    const double decay = 1.0 - opts.lr * opts.weight_decay;

    for (const auto& name : store.names()) {
        Parameter& p = store.at(name);
        if (!p.trainable) continue;
        auto [m_it, m_new] = state.first_moment.try_emplace(name, p.value.shape(), 0.0);
        auto [v_it, v_new] = state.second_moment.try_emplace(name, p.value.shape(), 0.0);
        Tensor& m = m_it->second;
        Tensor& v = v_it->second;
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g;
            v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g * g;
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            p.value[i] *= decay;
            p.value[i] -= opts.lr * m_hat / (std::sqrt(v_hat) + opts.eps);
        }
    }
}

void OptimizerState::save(const std::filesystem::path& dir) const {
    std::vector<NamedTensor> entries;
    for (const auto& [name, t] : first_moment) entries.push_back({"m:" + name, t, false});
    for (const auto& [name, t] : second_moment) entries.push_back({"v:" + name, t, false});
    save_tensor_set(dir, entries, {{"step", step}});
}

OptimizerState OptimizerState::load(const std::filesystem::path& dir) {
    TensorSet set = load_tensor_set(dir);
    OptimizerState state;
    state.step = set.meta.value("step", std::uint64_t{0});
    for (auto& e : set.entries) {
        if (e.name.rfind("m:", 0) == 0) {
            state.first_moment.emplace(e.name.substr(2), std::move(e.tensor));
        } else if (e.name.rfind("v:", 0) == 0) {
            state.second_moment.emplace(e.name.substr(2), std::move(e.tensor));
        } else {
            throw DataError("unexpected optimizer entry '" + e.name + "'");
        }
    }
    return state;
}

} // namespace lskt
