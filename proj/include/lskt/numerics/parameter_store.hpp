#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lskt/numerics/tensor.hpp"

namespace lskt {

struct Parameter {
    Tensor value;
    Tensor grad;
    bool trainable = true;
};

// Named trainable tensors. Names are unique and shapes never change after
// creation. Gradients accumulate until zero_grad().
class ParameterStore {
public:
    explicit ParameterStore(std::uint64_t init_seed = 0) : init_seed_(init_seed) {}

    Parameter& add(const std::string& name, Tensor init, bool trainable = true);

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;
    const Tensor& value(const std::string& name) const { return at(name).value; }
    const Tensor& grad(const std::string& name) const { return at(name).grad; }

    // Replaces the value; the shape must match.
    void set_value(const std::string& name, Tensor value);

    // Insertion order.
    const std::vector<std::string>& names() const noexcept { return order_; }
    std::size_t parameter_count() const;

    void zero_grad();
    double grad_norm() const;
    // Rescales all gradients so their global L2 norm is at most max_norm.
    // Returns the norm before clipping.
    double clip_grad_norm(double max_norm);

    std::uint64_t init_seed() const noexcept { return init_seed_; }

    void save(const std::filesystem::path& dir) const;
    // Loads values into an existing store. Every name must exist with the same
    // shape; mismatches raise ConfigError naming both shapes.
    void load_values(const std::filesystem::path& dir);
    static ParameterStore load(const std::filesystem::path& dir);

private:
    std::map<std::string, Parameter> entries_;
    std::vector<std::string> order_;
    std::uint64_t init_seed_;
};

} // namespace lskt
