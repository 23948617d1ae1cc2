#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace lskt::cli {

// Flat key→value layer. Values read from key=value files and flags are JSON
// strings until coerced against the defaults.
using Layer = nlohmann::json;

// A file starting with '{' is a flat JSON object; anything else is key=value
// lines with '#' comments. Throws ConfigError.
Layer read_config_file(const std::filesystem::path& path);

// "--key=value" or "--key value" tokens left over after option parsing.
Layer parse_override_tokens(const std::vector<std::string>& tokens);

// Converts `given` to the JSON type of `fallback` (the default value).
nlohmann::json coerce_value(const std::string& key, const nlohmann::json& fallback, const nlohmann::json& given);

// Applies layers in order (later wins) over the defaults. Keys absent from
// the defaults are rejected with ConfigError.
nlohmann::json resolve(const nlohmann::json& defaults, const std::vector<Layer>& layers);

// Copies only the given keys.
nlohmann::json select(const nlohmann::json& object, const std::vector<std::string>& keys);

// Deterministic pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& value);

} // namespace lskt::cli
