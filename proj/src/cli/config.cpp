#include "lskt/cli/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lskt/numerics/errors.hpp"

namespace lskt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& text, const char* expected) {
    throw ConfigError("value '" + text + "' for '" + key + "' is not " + expected);
}

} // namespace

Layer read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    if (trim(text).rfind('{', 0) == 0) {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
        if (!j.is_object()) throw ConfigError(path.string() + ": expected a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (value.is_object() || value.is_array()) throw ConfigError(path.string() + ": key '" + key + "' is nested");
        }
        return j;
    }

    Layer layer = json::object();
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": empty key");
        layer[key] = trim(line.substr(eq + 1));
    }
    return layer;
}

Layer parse_override_tokens(const std::vector<std::string>& tokens) {
    Layer layer = json::object();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& tok = tokens[i];
        if (tok.rfind("--", 0) != 0 || tok.size() == 2) throw ConfigError("unexpected argument '" + tok + "'");
        const std::string body = tok.substr(2);
        const auto eq = body.find('=');
        if (eq != std::string::npos) {
            layer[body.substr(0, eq)] = body.substr(eq + 1);
        } else if (i + 1 < tokens.size() && tokens[i + 1].rfind("--", 0) != 0) {
            layer[body] = tokens[++i];
        } else {
            throw ConfigError("option '--" + body + "' needs a value");
        }
    }
    return layer;
}

json coerce_value(const std::string& key, const json& fallback, const json& given) {
    if (!given.is_string()) {
        if (fallback.is_string()) return given.dump();
        if (fallback.is_number_float() && given.is_number()) return given.get<double>();
        if (fallback.is_number_unsigned() && given.is_number_integer()) {
            if (given.get<std::int64_t>() < 0) bad_value(key, given.dump(), "a non-negative integer");
            return given.get<std::uint64_t>();
        }
        if (fallback.type() == given.type()) return given;
        bad_value(key, given.dump(), fallback.type_name());
    }
    const std::string text = given.get<std::string>();
    if (fallback.is_string()) return text;
    if (fallback.is_boolean()) {
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        bad_value(key, text, "a boolean");
    }
    if (text.empty()) bad_value(key, text, "a number");
    char* end = nullptr;
    errno = 0;
    if (fallback.is_number_unsigned()) {
        if (text.find('-') != std::string::npos) bad_value(key, text, "a non-negative integer");
        const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
        if (*end != '\0' || errno == ERANGE) bad_value(key, text, "a non-negative integer");
        return static_cast<std::uint64_t>(v);
    }
    if (fallback.is_number_integer()) {
        const long long v = std::strtoll(text.c_str(), &end, 10);
        if (*end != '\0' || errno == ERANGE) bad_value(key, text, "an integer");
        return static_cast<std::int64_t>(v);
    }
    const double v = std::strtod(text.c_str(), &end);
    if (*end != '\0' || errno == ERANGE) bad_value(key, text, "a number");
    return v;
}

json resolve(const json& defaults, const std::vector<Layer>& layers) {
    json out = defaults;
    for (const auto& layer : layers) {
        for (const auto& [key, value] : layer.items()) {
            if (!defaults.contains(key)) throw ConfigError("unknown key '" + key + "'");
            out[key] = coerce_value(key, defaults.at(key), value);
        }
    }
    return out;
}

json select(const json& object, const std::vector<std::string>& keys) {
    json out = json::object();
    for (const auto& k : keys) {
        if (object.contains(k)) out[k] = object.at(k);
    }
    return out;
}

void write_json(const fs::path& path, const json& value) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << value.dump(2) << "\n";
}

} // namespace lskt::cli
