#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lskt/numerics/tensor.hpp"

namespace lskt {

struct NamedTensor {
    std::string name;
    Tensor tensor;
    bool trainable = true;
};

// On-disk tensor set: `index.json` lists name, shape, dtype tag and blob file
// for every entry; each blob is the flat little-endian float64 data.
// `meta` is stored verbatim under the "meta" key of the index.
void save_tensor_set(const std::filesystem::path& dir, const std::vector<NamedTensor>& entries,
                     const nlohmann::json& meta = nlohmann::json::object());

struct TensorSet {
    std::vector<NamedTensor> entries;
    nlohmann::json meta;
};

// Throws DataError on a missing/corrupt directory.
TensorSet load_tensor_set(const std::filesystem::path& dir);

void write_f64_blob(const std::filesystem::path& file, std::span<const double> values);
std::vector<double> read_f64_blob(const std::filesystem::path& file, std::size_t expected_count);

} // namespace lskt
