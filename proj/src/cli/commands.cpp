#include "lskt/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "lskt/cli/config.hpp"
#include "lskt/data.hpp"
#include "lskt/gradcheck.hpp"
#include "lskt/model.hpp"
#include "lskt/numerics/errors.hpp"

namespace lskt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(' '));
        item.erase(item.find_last_not_of(' ') + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<std::size_t> parse_cluster_sweep(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text)) {
        const auto dash = item.find('-');
        try {
            if (dash == std::string::npos) {
                out.push_back(std::stoul(item));
            } else {
                const std::size_t lo = std::stoul(item.substr(0, dash)), hi = std::stoul(item.substr(dash + 1));
                if (lo > hi) throw ConfigError("empty cluster range '" + item + "'");
                for (std::size_t n = lo; n <= hi; ++n) out.push_back(n);
            }
        } catch (const std::logic_error&) {
            throw ConfigError("bad cluster sweep entry '" + item + "'");
        }
    }
    for (std::size_t n : out) {
        if (n < 1) throw ConfigError("cluster counts must be >= 1");
    }
    return out;
}

ModelConfig model_config_of(const json& resolved) {
    ModelConfig c = ModelConfig::from_json(select(resolved, model_config_keys()));
    c.validate();
    return c;
}

std::string require_key(const json& resolved, const std::string& key) {
    const std::string v = resolved.at(key).get<std::string>();
    if (v.empty()) throw ConfigError("missing required setting '" + key + "'");
    return v;
}

struct LoadedData {
    SequenceSet set;
    DataSplit split;
};

LoadedData load_data(const std::string& path, const ModelConfig& config) {
    LoadedData d;
    d.set = build_sequences(parse_csv(fs::path(path)), config.max_length);
    if (d.set.sequences.empty()) throw DataError("no usable sequences in '" + path + "'");
    try {
        d.split = split_for_config(d.set, config);
    } catch (const ContractError& e) {
        throw DataError("'" + path + "': " + e.what());
    }
    return d;
}

json checkpoint_layer(const std::string& checkpoint) {
    const fs::path cfg = fs::path(checkpoint) / "config.json";
    if (!fs::exists(cfg)) return json::object();
    std::ifstream in(cfg);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(cfg.string() + ": " + e.what());
    }
    auto keys = model_config_keys();
    keys.push_back("data");
    return select(j, keys);
}

TrainingState restore(const std::string& checkpoint, const ModelConfig& config, const SequenceSet& set) {
    if (!fs::exists(fs::path(checkpoint) / "params" / "index.json")) {
        throw DataError("no checkpoint found at '" + checkpoint + "'");
    }
    TrainingState state = init_training_state(config, set);
    load_checkpoint(checkpoint, state);
    return state;
}

void print_epoch(const EpochRecord& r, std::size_t total) {
    std::printf("epoch %zu/%zu train_loss=%.6f val_auc=%.6f val_acc=%.6f val_rmse=%.6f val_mae=%.6f\n", r.epoch, total,
                r.train_loss, r.validation.auc, r.validation.acc, r.validation.rmse, r.validation.mae);
    std::fflush(stdout);
}

} // namespace

json command_defaults(const std::string& command) {
    json d;
    if (command == "synth") {
        d = SynthSpec{}.to_json();
    } else if (command == "gradcheck") {
        d = gradcheck_defaults().to_json();
    } else {
        d = ModelConfig{}.to_json();
        d["data"] = "";
        if (command == "train") {
            d["resume"] = false;
        } else if (command == "evaluate") {
            d["checkpoint"] = "";
        } else if (command == "ablate") {
            d["variants"] = "full,RLS,RLE,RKS";
            d["irt_levels"] = "NI,1PL,2PL,3PL";
            d["sweep_clusters"] = "";
        } else if (command == "export-embeddings") {
            d["checkpoint"] = "";
            d["export_learners"] = "";
        } else {
            throw ConfigError("unknown command '" + command + "'");
        }
    }
    d["out"] = "";
    return d;
}

json resolve_invocation(const std::string& command, const Invocation& inv, const json& checkpoint) {
    std::vector<Layer> layers{checkpoint};
    if (!inv.config_path.empty()) layers.push_back(read_config_file(inv.config_path));
    layers.push_back(parse_override_tokens(inv.overrides));
    Layer flags = json::object();
    if (inv.seed) flags["seed"] = *inv.seed;
    if (!inv.out.empty()) flags["out"] = inv.out;
    layers.push_back(flags);
    return resolve(command_defaults(command), layers);
}

int cmd_train(const Invocation& inv) {
    const json resolved = resolve_invocation("train", inv);
    const ModelConfig config = model_config_of(resolved);
    const fs::path out = require_key(resolved, "out");
    const std::string data_path = require_key(resolved, "data");
    LoadedData data = load_data(data_path, config);

    fs::create_directories(out);
    write_json(out / "config.json", resolved);
    write_json(out / "skipped_learners.json", data.set.skipped_report());

    TrainingState state = init_training_state(config, data.set);
    if (resolved.at("resume").get<bool>() && fs::exists(out / "params" / "index.json")) {
        load_checkpoint(out, state);
        std::printf("resuming after epoch %zu\n", state.history.size());
    }
    train(state, data.set, data.split, [&](const TrainingState& s) {
        save_checkpoint(out, s);
        print_epoch(s.history.back(), config.epochs);
    });
    if (state.history.empty()) throw ConfigError("epochs must be >= 1 to produce metrics");
    save_checkpoint(out, state);

    const EpochRecord& last = state.history.back();
    json metrics{{"epochs", state.history.size()},
                 {"train_loss", last.train_loss},
                 {"validation", last.validation.to_json()},
                 {"split_hash", data.split.hash()},
                 {"train_sequences", data.split.train.size()},
                 {"test_sequences", data.split.test.size()}};
    write_json(out / "metrics.json", metrics);
    return kExitOk;
}

int cmd_evaluate(const Invocation& inv) {
    const json first = resolve_invocation("evaluate", inv);
    const std::string checkpoint = require_key(first, "checkpoint");
    if (!fs::exists(checkpoint)) throw DataError("checkpoint '" + checkpoint + "' does not exist");
    const json resolved = resolve_invocation("evaluate", inv, checkpoint_layer(checkpoint));
    const ModelConfig config = model_config_of(resolved);
    LoadedData data = load_data(require_key(resolved, "data"), config);

    TrainingState state = restore(checkpoint, config, data.set);
    const EvaluationOutput result = evaluate(state.model, data.set, data.split.test, state.clusters);
    json report = result.metrics.to_json();
    report["split_hash"] = data.split.hash();

    fs::path out = resolved.at("out").get<std::string>();
    if (out.empty()) out = fs::path(checkpoint) / "evaluate";
    fs::create_directories(out);
    write_json(out / "config.json", resolved);
    write_json(out / "metrics.json", report);
    std::cout << report.dump(2) << "\n";
    return kExitOk;
}

int cmd_ablate(const Invocation& inv) {
    const json resolved = resolve_invocation("ablate", inv);
    const ModelConfig base = model_config_of(resolved);
    const fs::path out = require_key(resolved, "out");
    LoadedData data = load_data(require_key(resolved, "data"), base);

    std::vector<Ablation> variants;
    for (const auto& v : split_list(resolved.at("variants").get<std::string>())) variants.push_back(parse_ablation(v));
    std::vector<IrtLevel> levels;
    for (const auto& l : split_list(resolved.at("irt_levels").get<std::string>())) levels.push_back(parse_irt_level(l));
    const auto sweep = parse_cluster_sweep(resolved.at("sweep_clusters").get<std::string>());
    if (variants.empty() && sweep.empty()) throw ConfigError("nothing to run: no variants and no cluster sweep");
    if (!variants.empty() && levels.empty()) throw ConfigError("irt_levels must not be empty");

    fs::create_directories(out);
    write_json(out / "config.json", resolved);
    const std::string hash = data.split.hash();

    auto run_one = [&](const ModelConfig& cfg) {
        TrainingState state = init_training_state(cfg, data.set);
        train(state, data.set, data.split);
        if (state.history.empty()) throw ConfigError("epochs must be >= 1");
        return std::make_pair(state.history.back().validation, state.inactive_grad_max);
    };

    if (!variants.empty()) {
        std::ofstream csv(out / "ablation.csv", std::ios::trunc);
        csv << "variant,irt,auc,acc,rmse,mae,split_hash,inactive_grad_max\n";
        for (Ablation a : variants) {
            for (IrtLevel l : levels) {
                ModelConfig cfg = base;
                cfg.ablation = a;
                cfg.irt_level = l;
                const auto [m, inactive] = run_one(cfg);
                csv << to_string(a) << ',' << to_string(l) << ',' << fmt17(m.auc) << ',' << fmt17(m.acc) << ','
                    << fmt17(m.rmse) << ',' << fmt17(m.mae) << ',' << hash << ',' << fmt17(inactive) << '\n';
                csv.flush();
                std::printf("%-4s %-3s auc=%.6f acc=%.6f rmse=%.6f mae=%.6f\n", to_string(a).c_str(), to_string(l).c_str(),
                            m.auc, m.acc, m.rmse, m.mae);
                std::fflush(stdout);
            }
        }
    }
    if (!sweep.empty()) {
        std::ofstream csv(out / "cluster_sweep.csv", std::ios::trunc);
        csv << "clusters,variant,irt,auc,acc,rmse,mae,split_hash\n";
        for (std::size_t n : sweep) {
            ModelConfig cfg = base;
            cfg.clusters = n;
            const auto [m, inactive] = run_one(cfg);
            (void)inactive;
            csv << n << ',' << to_string(cfg.ablation) << ',' << to_string(cfg.irt_level) << ',' << fmt17(m.auc) << ','
                << fmt17(m.acc) << ',' << fmt17(m.rmse) << ',' << fmt17(m.mae) << ',' << hash << '\n';
            csv.flush();
            std::printf("n=%-2zu auc=%.6f\n", n, m.auc);
            std::fflush(stdout);
        }
    }
    return kExitOk;
}

int cmd_synth(const Invocation& inv) {
    const json resolved = resolve_invocation("synth", inv);
    const fs::path out = require_key(resolved, "out");
    json spec_json = resolved;
    spec_json.erase("out");
    const SynthSpec spec = SynthSpec::from_json(spec_json);
    spec.validate();
    const auto records = synth_generate(spec);
    fs::create_directories(out);
    write_csv(out / "interactions.csv", records);
    write_json(out / "spec.json", spec.to_json());
    write_json(out / "config.json", resolved);
    std::printf("wrote %zu interactions to %s\n", records.size(), (out / "interactions.csv").string().c_str());
    return kExitOk;
}

int cmd_gradcheck(const Invocation& inv) {
    const json resolved = resolve_invocation("gradcheck", inv);
    const ModelConfig config = model_config_of(resolved);
    GradcheckOptions opts;
    opts.fault_scale = inv.inject_fault;
    const GradcheckReport report = run_gradcheck(config, opts);

    json groups = json::array();
    for (const auto& g : report.groups) {
        std::printf("%-10s max_rel_error=%.3e checked=%zu near_zero=%zu kinked=%zu worst=%s %s\n",
                    to_string(g.group).c_str(), g.max_rel_error, g.checked, g.near_zero, g.kinked, g.worst.c_str(),
                    g.passed ? "PASS" : "FAIL");
        groups.push_back({{"group", to_string(g.group)},
                          {"max_rel_error", g.max_rel_error},
                          {"checked", g.checked},
                          {"near_zero", g.near_zero},
                          {"max_near_zero_gap", g.max_near_zero_gap},
                          {"kinked", g.kinked},
                          {"max_kinked_error", g.max_kinked_error},
                          {"worst", g.worst},
                          {"passed", g.passed}});
    }
    std::printf("masked pairs: %zu, elapsed: %.2f s\n", report.masked_pairs, report.seconds);
    const std::string out = resolved.at("out").get<std::string>();
    if (!out.empty()) {
        write_json(fs::path(out) / "config.json", resolved);
        write_json(fs::path(out) / "gradcheck.json", {{"groups", groups}, {"passed", report.passed()}});
    }
    return report.passed() ? kExitOk : kExitCheckFailed;
}

int cmd_export_embeddings(const Invocation& inv) {
    const json first = resolve_invocation("export-embeddings", inv);
    const std::string checkpoint = require_key(first, "checkpoint");
    if (!fs::exists(checkpoint)) throw DataError("checkpoint '" + checkpoint + "' does not exist");
    const json resolved = resolve_invocation("export-embeddings", inv, checkpoint_layer(checkpoint));
    const ModelConfig config = model_config_of(resolved);
    LoadedData data = load_data(require_key(resolved, "data"), config);
    TrainingState state = restore(checkpoint, config, data.set);
    LsktModel& model = state.model;
    const std::size_t D = config.dim;

    fs::path out = resolved.at("out").get<std::string>();
    if (out.empty()) out = fs::path(checkpoint) / "export";
    fs::create_directories(out);
    write_json(out / "config.json", resolved);

    // Exercise features, one row per exercise (padding excluded).
    {
        const std::size_t E = data.set.exercises.size();
        std::vector<std::size_t> ex(E - 1), con(E - 1), resp(E - 1, 0);
        for (std::size_t e = 1; e < E; ++e) {
            ex[e - 1] = e;
            con[e - 1] = data.set.exercise_concept[e];
        }
        std::ofstream csv(out / "exercises.csv", std::ios::trunc);
        csv << "exercise_id,concept_id";
        for (std::size_t k = 0; k < D; ++k) csv << ",x_" << k;
        csv << '\n';
        if (E > 1) {
            Graph g(false);
            const Var x = embed_exercise(g, model.params(), config.irt_level, StepIndices{con, ex, resp});
            for (std::size_t e = 1; e < E; ++e) {
                csv << data.set.exercises.id(e) << ',' << data.set.concepts.id(con[e - 1]);
                for (std::size_t k = 0; k < D; ++k) csv << ',' << fmt17(x.value().at(e - 1, k));
                csv << '\n';
            }
        }
    }

    // Per-step states for the requested learners (all when unspecified).
    const auto wanted = split_list(resolved.at("export_learners").get<std::string>());
    const std::set<std::string> wanted_set(wanted.begin(), wanted.end());
    std::set<std::string> found;
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < data.set.sequences.size(); ++i) {
        const auto& id = data.set.sequences[i].learner_id;
        if (wanted_set.empty() || wanted_set.count(id)) {
            indices.push_back(i);
            found.insert(id);
        }
    }
    for (const auto& id : wanted_set) {
        if (!found.count(id)) throw DataError("learner '" + id + "' not found in the data");
    }

    std::ofstream csv(out / "states.csv", std::ios::trunc);
    csv << "learner_id,chunk,t,label";
    for (const char* prefix : {"yhat_", "h_", "z_"}) {
        for (std::size_t k = 0; k < D; ++k) csv << ',' << prefix << k;
    }
    csv << '\n';
    auto write_row = [&](const Var& v, std::size_t t) {
        for (std::size_t k = 0; k < D; ++k) {
            csv << ',';
            if (v.valid()) csv << fmt17(v.value().at(t, k));
        }
    };
    for (std::size_t start = 0; start < indices.size(); start += config.batch_size) {
        std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(start),
                                       indices.begin() + static_cast<std::ptrdiff_t>(std::min(indices.size(), start + config.batch_size)));
        const SequenceBatch batch = make_batch(data.set, chunk);
        Graph g(false);
        const ForwardResult r = model.forward(g, batch, state.clusters);
        for (std::size_t b = 0; b < chunk.size(); ++b) {
            const Sequence& seq = data.set.sequences[chunk[b]];
            const SequenceTrace& tr = r.traces[b];
            std::vector<int> labels = tr.labels;
            if (labels.empty() && tr.learning_state.valid()) labels = attention_labels(tr.learning_state.value(), state.clusters);
            for (std::size_t t = 0; t < seq.valid_length; ++t) {
                csv << seq.learner_id << ',' << seq.chunk << ',' << t << ',';
                if (!labels.empty()) csv << labels[t];
                write_row(tr.learning_state, t);
                write_row(tr.knowledge, t);
                write_row(tr.fused, t);
                csv << '\n';
            }
        }
    }
    std::printf("exported %zu exercises and %zu sequences to %s\n", data.set.exercises.size() - 1, indices.size(),
                out.string().c_str());
    return kExitOk;
}

} // namespace lskt::cli
