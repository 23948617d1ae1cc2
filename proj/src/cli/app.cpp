#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "lskt/cli/commands.hpp"
#include "lskt/numerics/errors.hpp"

namespace lskt::cli {

namespace {

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const VocabularyError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"LSKT knowledge tracing: train, evaluate, ablate, synth, gradcheck, export-embeddings"};
    app.require_subcommand(1);

    using Command = int (*)(const Invocation&);
    const std::vector<std::pair<std::string, Command>> commands{
        {"train", cmd_train},
        {"evaluate", cmd_evaluate},
        {"ablate", cmd_ablate},
        {"synth", cmd_synth},
        {"gradcheck", cmd_gradcheck},
        {"export-embeddings", cmd_export_embeddings},
    };
    const std::map<std::string, std::string> help{
        {"train", "Train a model and write checkpoints, history.csv and metrics.json"},
        {"evaluate", "Score the held-out split with a saved checkpoint"},
        {"ablate", "Train every requested variant and IRT level, write ablation.csv"},
        {"synth", "Generate a synthetic IRT dataset"},
        {"gradcheck", "Compare analytic gradients with central differences"},
        {"export-embeddings", "Write exercise features and per-step states as CSV"},
    };

    Invocation inv;
    std::uint64_t seed = 0;
    std::vector<std::pair<CLI::App*, Command>> subs;
    for (const auto& [name, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        sub->allow_extras();
        sub->add_option("--config", inv.config_path, "key=value or JSON config file");
        sub->add_option("--seed", seed, "Run seed (overrides the config file)");
        sub->add_option("--out", inv.out, "Output directory");
        if (name == "gradcheck") sub->add_option("--inject-fault", inv.inject_fault)->group("");
        subs.emplace_back(sub, fn);
    }
    app.footer("Any setting may be overridden with --<key>=<value>.\nExit codes: 0 ok, 1 check failed, 2 config, 3 data, 4 numerical.");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    for (auto& [sub, fn] : subs) {
        if (!sub->parsed()) continue;
        if (sub->count("--seed")) inv.seed = seed;
        inv.overrides = sub->remaining();
        Command command = fn;
        return guarded([&] { return command(inv); });
    }
    return kExitConfig;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace lskt::cli
