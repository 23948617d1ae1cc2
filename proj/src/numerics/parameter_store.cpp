#include "lskt/numerics/parameter_store.hpp"

#include <cmath>

#include "lskt/numerics/errors.hpp"
#include "lskt/numerics/tensor_io.hpp"

namespace lskt {

Parameter& ParameterStore::add(const std::string& name, Tensor init, bool trainable) {
    if (entries_.count(name)) throw ContractError("duplicate parameter name '" + name + "'");
    Tensor grad(init.shape(), 0.0);
    order_.push_back(name);
    return entries_.emplace(name, Parameter{std::move(init), std::move(grad), trainable}).first->second;
}

Parameter& ParameterStore::at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
}

const Parameter& ParameterStore::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
}

void ParameterStore::set_value(const std::string& name, Tensor value) {
    Parameter& p = at(name);
    if (!p.value.same_shape(value)) {
        throw DimensionError("parameter '" + name + "' has shape " + shape_to_string(p.value.shape()) +
                             ", got " + shape_to_string(value.shape()));
    }
    p.value = std::move(value);
}

std::size_t ParameterStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : entries_) n += p.value.size();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& [name, p] : entries_) p.grad.fill(0.0);
}

double ParameterStore::grad_norm() const {
    double sq = 0.0;
    for (const auto& name : order_) {
        for (double g : entries_.at(name).grad.data()) sq += g * g;
    }
    return std::sqrt(sq);
}

double ParameterStore::clip_grad_norm(double max_norm) {
    const double norm = grad_norm();
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& [name, p] : entries_) {
            for (double& g : p.grad.data()) g *= scale;
        }
    }
    return norm;
}

void ParameterStore::save(const std::filesystem::path& dir) const {
    std::vector<NamedTensor> entries;
    entries.reserve(order_.size());
    for (const auto& name : order_) {
        const auto& p = entries_.at(name);
        entries.push_back({name, p.value, p.trainable});
    }
    save_tensor_set(dir, entries, {{"init_seed", init_seed_}});
}

void ParameterStore::load_values(const std::filesystem::path& dir) {
    TensorSet set = load_tensor_set(dir);
    if (set.entries.size() != order_.size()) {
        throw ConfigError("checkpoint has " + std::to_string(set.entries.size()) +
                          " parameters, model expects " + std::to_string(order_.size()));
    }
    for (auto& e : set.entries) {
        if (!contains(e.name)) throw ConfigError("checkpoint parameter '" + e.name + "' unknown to model");
        Parameter& p = at(e.name);
        if (!p.value.same_shape(e.tensor)) {
            throw ConfigError("parameter '" + e.name + "': checkpoint shape " +
                              shape_to_string(e.tensor.shape()) + " vs model shape " +
                              shape_to_string(p.value.shape()));
        }
        p.value = std::move(e.tensor);
    }
}

ParameterStore ParameterStore::load(const std::filesystem::path& dir) {
    TensorSet set = load_tensor_set(dir);
    ParameterStore store(set.meta.value("init_seed", std::uint64_t{0}));
    for (auto& e : set.entries) store.add(e.name, std::move(e.tensor), e.trainable);
    return store;
}

} // namespace lskt
