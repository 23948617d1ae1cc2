#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lskt::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,
    kExitConfig = 2,
    kExitData = 3,
    kExitNumerical = 4,
};

// What the argument parser hands to a command.
struct Invocation {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> overrides;  // --key=value tokens
    double inject_fault = 1.0;           // gradcheck negative control
};

// Key sets and defaults per command (the "out" key is always present).
nlohmann::json command_defaults(const std::string& command);

// Resolves defaults < checkpoint config (when given) < --config < overrides
// < --seed/--out.
nlohmann::json resolve_invocation(const std::string& command, const Invocation& inv,
                                  const nlohmann::json& checkpoint_layer = nlohmann::json::object());

int cmd_train(const Invocation& inv);
int cmd_evaluate(const Invocation& inv);
int cmd_ablate(const Invocation& inv);
int cmd_synth(const Invocation& inv);
int cmd_gradcheck(const Invocation& inv);
int cmd_export_embeddings(const Invocation& inv);

// Full command line (argv[0] first). Maps exceptions to exit codes.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

} // namespace lskt::cli
