#include "lskt/numerics/tensor_io.hpp"

#include <bit>
#include <cctype>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "lskt/numerics/errors.hpp"

namespace lskt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDtypeTag = "float64-le";

std::string blob_name(std::size_t index, const std::string& name) {
    std::string safe;
    for (char c : name) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_') ? c : '_';
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%04zu_", index);
    return prefix + safe + ".bin";
}

} // namespace

void write_f64_blob(const fs::path& file, std::span<const double> values) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + file.string() + " for writing");
    for (double v : values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        unsigned char bytes[8];
        std::memcpy(bytes, &bits, 8);
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
    if (!out) throw DataError("write failed for " + file.string());
}

std::vector<double> read_f64_blob(const fs::path& file, std::size_t expected_count) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open " + file.string());
    std::vector<double> values(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
            throw DataError("blob " + file.string() + " is shorter than expected (" +
                            std::to_string(expected_count) + " values)");
        }
        std::uint64_t bits;
        std::memcpy(&bits, bytes, 8);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        values[i] = std::bit_cast<double>(bits);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw DataError("blob " + file.string() + " is longer than expected");
    }
    return values;
}

void save_tensor_set(const fs::path& dir, const std::vector<NamedTensor>& entries, const json& meta) {
    fs::create_directories(dir);
    json index;
    index["format"] = "lskt-tensor-set";
    index["version"] = 1;
    index["meta"] = meta;
    index["entries"] = json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        const std::string file = blob_name(i, e.name);
        write_f64_blob(dir / file, e.tensor.data());
        index["entries"].push_back({{"name", e.name},
                                    {"shape", e.tensor.shape()},
                                    {"dtype", kDtypeTag},
                                    {"trainable", e.trainable},
                                    {"file", file}});
    }
    std::ofstream out(dir / "index.json", std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / "index.json").string());
    out << index.dump(2) << "\n";
}

TensorSet load_tensor_set(const fs::path& dir) {
    const fs::path index_path = dir / "index.json";
    std::ifstream in(index_path);
    if (!in) throw DataError("missing tensor index " + index_path.string());
    json index;
    try {
        in >> index;
    } catch (const json::exception& e) {
        throw DataError("corrupt tensor index " + index_path.string() + ": " + e.what());
    }
    TensorSet set;
    set.meta = index.value("meta", json::object());
    for (const auto& e : index.at("entries")) {
        if (e.at("dtype").get<std::string>() != kDtypeTag) {
            throw DataError("unsupported dtype in " + index_path.string());
        }
        Shape shape = e.at("shape").get<Shape>();
        auto values = read_f64_blob(dir / e.at("file").get<std::string>(), shape_numel(shape));
        set.entries.push_back({e.at("name").get<std::string>(), Tensor(std::move(shape), std::move(values)),
                               e.value("trainable", true)});
    }
    return set;
}

} // namespace lskt
