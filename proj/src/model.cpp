#include "lskt/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lskt/numerics/errors.hpp"
#include "lskt/numerics/tensor_io.hpp"

namespace lskt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Sub-seed tags; every random stream is derived from the run seed.
enum SeedTag : std::uint64_t { kInitTag = 1, kShuffleTag = 2, kStepTag = 3, kKmeansTag = 4, kEvalKmeansTag = 5, kSplitTag = 7 };

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
    return out;
}

} // namespace

std::string to_string(Ablation ablation) {
    switch (ablation) {
        case Ablation::full: return "full";
        case Ablation::RLS: return "RLS";
        case Ablation::RLE: return "RLE";
        case Ablation::RKS: return "RKS";
    }
    return "?";
}

Ablation parse_ablation(std::string_view text) {
    const std::string s = upper(text);
    if (s == "FULL" || s == "LSKT") return Ablation::full;
    if (s == "RLS") return Ablation::RLS;
    if (s == "RLE") return Ablation::RLE;
    if (s == "RKS") return Ablation::RKS;
    throw ConfigError("unknown variant '" + std::string(text) + "' (expected full, RLS, RLE or RKS)");
}

ComponentFlags component_flags(Ablation ablation) {
    switch (ablation) {
        case Ablation::full: return {true, true, true};
        case Ablation::RLS: return {false, false, true};
        case Ablation::RLE: return {true, false, true};
        case Ablation::RKS: return {true, false, false};
    }
    throw ConfigError("unknown ablation");
}

const std::vector<std::string>& model_config_keys() {
    static const std::vector<std::string> keys{
        "dim",         "max_length",  "kernel_size", "pool_capacity", "clusters",          "lr",
        "batch_size",  "dropout",     "epochs",      "seed",          "irt_level",         "ablation",
        "weight_decay", "beta1",      "beta2",       "adam_eps",      "grad_clip",         "kmeans_iterations",
        "guess_in_eval", "train_fraction"};
    return keys;
}

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
    };
    positive(dim, "dim");
    positive(max_length, "max_length");
    positive(kernel_size, "kernel_size");
    positive(pool_capacity, "pool_capacity");
    positive(clusters, "clusters");
    positive(batch_size, "batch_size");
    positive(kmeans_iterations, "kmeans_iterations");
    if (max_length < 2) throw ConfigError("max_length must be >= 2");
    // lr = 0 is allowed: it freezes the parameters, which is useful as a control.
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a finite value >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0,1)");
    if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be > 0");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0,1)");
}

json ModelConfig::to_json() const {
    return {{"dim", dim},
            {"max_length", max_length},
            {"kernel_size", kernel_size},
            {"pool_capacity", pool_capacity},
            {"clusters", clusters},
            {"lr", lr},
            {"batch_size", batch_size},
            {"dropout", dropout},
            {"epochs", epochs},
            {"seed", seed},
            {"irt_level", to_string(irt_level)},
            {"ablation", to_string(ablation)},
            {"weight_decay", weight_decay},
            {"beta1", beta1},
            {"beta2", beta2},
            {"adam_eps", adam_eps},
            {"grad_clip", grad_clip},
            {"kmeans_iterations", kmeans_iterations},
            {"guess_in_eval", guess_in_eval},
            {"train_fraction", train_fraction}};
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig c;
    const auto& keys = model_config_keys();
    for (const auto& [key, value] : j.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown model key '" + key + "'");
    }
    try {
        c.dim = j.value("dim", c.dim);
        c.max_length = j.value("max_length", c.max_length);
        c.kernel_size = j.value("kernel_size", c.kernel_size);
        c.pool_capacity = j.value("pool_capacity", c.pool_capacity);
        c.clusters = j.value("clusters", c.clusters);
        c.lr = j.value("lr", c.lr);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.dropout = j.value("dropout", c.dropout);
        c.epochs = j.value("epochs", c.epochs);
        c.seed = j.value("seed", c.seed);
        if (j.contains("irt_level")) c.irt_level = parse_irt_level(j.at("irt_level").get<std::string>());
        if (j.contains("ablation")) c.ablation = parse_ablation(j.at("ablation").get<std::string>());
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.adam_eps = j.value("adam_eps", c.adam_eps);
        c.grad_clip = j.value("grad_clip", c.grad_clip);
        c.kmeans_iterations = j.value("kmeans_iterations", c.kmeans_iterations);
        c.guess_in_eval = j.value("guess_in_eval", c.guess_in_eval);
        c.train_fraction = j.value("train_fraction", c.train_fraction);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad model config value: ") + e.what());
    }
    return c;
}

std::string to_string(ParameterGroup group) {
    switch (group) {
        case ParameterGroup::embeddings: return "embeddings";
        case ParameterGroup::lse: return "lse";
        case ParameterGroup::fusion: return "fusion";
        case ParameterGroup::head: return "head";
    }
    return "?";
}

ParameterGroup parameter_group(const std::string& name) {
    if (name.rfind("emb.", 0) == 0) return ParameterGroup::embeddings;
    if (name.rfind("lse.", 0) == 0) return ParameterGroup::lse;
    if (name == head::fusion_weight || name == head::fusion_bias) return ParameterGroup::fusion;
    return ParameterGroup::head;
}

std::vector<Tensor> ForwardResult::learning_states() const {
    std::vector<Tensor> out;
    for (const auto& t : traces) {
        if (t.learning_state.valid()) out.push_back(t.learning_state.value());
    }
    return out;
}

std::vector<double> ForwardResult::probabilities() const {
    if (!predictions.valid()) return {};
    const auto d = predictions.value().data();
    return {d.begin(), d.end()};
}

Var bce_loss(const Var& predictions, std::span<const int> targets) {
    const Tensor& P = predictions.value();
    if (targets.empty()) throw ContractError("bce_loss: no valid targets");
    if (P.size() != targets.size()) {
        throw DimensionError("bce_loss: " + std::to_string(P.size()) + " predictions for " +
                             std::to_string(targets.size()) + " targets");
    }
    const double lo = kProbabilityClamp, hi = 1.0 - kProbabilityClamp;
    const double inv_n = 1.0 / static_cast<double>(targets.size());
    double total = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double p = std::clamp(P[i], lo, hi);
        total -= targets[i] ? std::log(p) : std::log(1.0 - p);
    }
    std::vector<int> t(targets.begin(), targets.end());
    return predictions.graph().record(
        Tensor::scalar(total * inv_n), {predictions}, [predictions, t = std::move(t), inv_n, lo, hi](Graph& g, const Tensor& d) {
            Tensor* dp = g.grad_slot(predictions);
            if (!dp) return;
            const Tensor& P = predictions.value();
            for (std::size_t i = 0; i < P.size(); ++i) {
                if (P[i] < lo || P[i] > hi) continue;  // clamped: flat
                (*dp)[i] += d[0] * inv_n * (t[i] ? -1.0 / P[i] : 1.0 / (1.0 - P[i]));
            }
        });
}

Var fuse(Graph& g, ParameterStore& store, const Var& knowledge, const Var& learning_state) {
    return linear(concat_last(knowledge, learning_state), g.param(store, head::fusion_weight),
                  g.param(store, head::fusion_bias));
}

Var predict(Graph& g, ParameterStore& store, const Var& fused, const Var& next_exercise) {
    return sigmoid(linear(concat_last(fused, next_exercise), g.param(store, head::predict_weight),
                          g.param(store, head::predict_bias)));
}

LsktModel::LsktModel(ModelConfig config, std::size_t concept_vocab, std::size_t exercise_vocab)
    : config_(std::move(config)),
      concept_vocab_(concept_vocab),
      exercise_vocab_(exercise_vocab),
      params_(derive_seed(config_.seed, {kInitTag})) {
    Rng rng(params_.init_seed());
    const std::size_t D = config_.dim;
    add_embedding_parameters(params_, concept_vocab, exercise_vocab, D, rng);
    add_lse_parameters(params_, config_.lse(), rng);
    const double bound = 1.0 / std::sqrt(2.0 * static_cast<double>(D));
    Tensor w7({2 * D, D}), w8({2 * D, 1});
    for (double& v : w7.data()) v = rng.uniform(-bound, bound);
    for (double& v : w8.data()) v = rng.uniform(-bound, bound);
    params_.add(head::fusion_weight, std::move(w7));
    params_.add(head::fusion_bias, Tensor({D}, 0.0));
    params_.add(head::predict_weight, std::move(w8));
    params_.add(head::predict_bias, Tensor({1}, 0.0));
}

std::vector<std::string> LsktModel::active_parameters() const {
    const ComponentFlags f = flags();
    std::vector<std::string> names = embedding_parameters_used(config_.irt_level);
    if (f.learning_state_extraction) {
        for (auto& n : lse::parameter_names()) names.push_back(n);
    }
    if (f.learning_state_extraction && f.knowledge_state_extraction) {
        names.push_back(head::fusion_weight);
        names.push_back(head::fusion_bias);
    }
    names.push_back(head::predict_weight);
    names.push_back(head::predict_bias);
    return names;
}

SequenceTrace LsktModel::forward_sequence(Graph& g, const StepIndices& steps, const ClusterModel& clusters,
                                          const ForwardOptions& options, const std::vector<int>* fixed_labels) {
    const ComponentFlags f = flags();
    SequenceTrace trace;
    trace.valid_length = steps.concepts.size();
    Embedded e = embed_sequence(g, params_, config_.variant(), steps, options.train_mode, options.rng);
    trace.exercise = e.exercise;
    trace.interaction = e.interaction;

    if (f.learning_state_extraction) {
        trace.learning_state = lse_forward(g, params_, config_.lse(), e.interaction, options.train_mode, options.rng);
    }
    if (!f.knowledge_state_extraction) {
        trace.fused = trace.learning_state;
        return trace;
    }
    if (f.learning_state_enhancement) {
        if (fixed_labels != nullptr) {
            if (fixed_labels->size() != trace.valid_length) throw DimensionError("fixed label count differs from sequence length");
            trace.labels = *fixed_labels;
        } else {
            trace.labels = attention_labels(trace.learning_state.value(), clusters);
        }
        MaskedScores scores = cluster_mask(state_similarity(trace.learning_state), trace.labels);
        trace.attention = combined_attention(e.exercise, scores);
    } else {
        trace.attention = exercise_attention(e.exercise);
    }
    trace.knowledge = knowledge_state(trace.attention, e.interaction);
    trace.fused = f.learning_state_extraction ? fuse(g, params_, trace.knowledge, trace.learning_state) : trace.knowledge;
    return trace;
}

ForwardResult LsktModel::forward(Graph& g, const SequenceBatch& batch, const ClusterModel& clusters,
                                 const ForwardOptions& options) {
    const std::size_t B = batch.batch_size, L = batch.length;
    const std::size_t cells = B * L;
    if (batch.exercises.size() != cells || batch.concepts.size() != cells || batch.responses.size() != cells ||
        batch.valid_lengths.size() != B) {
        throw ContractError("forward: batch is not a padded [B,L] block");
    }
    if (L < 1) throw ContractError("forward: empty sequence length");
    if (options.fixed_labels && options.fixed_labels->size() != B) {
        throw DimensionError("fixed labels must be given per sequence");
    }
    ForwardResult result;
    result.batch.probabilities = Tensor({B, L - 1}, 0.0);
    result.batch.targets = Tensor({B, L - 1}, 0.0);
    result.batch.valid.assign(B * (L - 1), 0);

    std::vector<Var> parts;
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t n = batch.valid_lengths[b];
        if (n > L) throw ContractError("forward: valid length exceeds padded length");
        if (n == 0) {
            result.traces.emplace_back();
            continue;
        }
        const std::size_t off = b * L;
        StepIndices steps{std::span(batch.concepts).subspan(off, n), std::span(batch.exercises).subspan(off, n),
                          std::span(batch.responses).subspan(off, n)};
        const std::vector<int>* fixed = options.fixed_labels ? &(*options.fixed_labels)[b] : nullptr;
        SequenceTrace trace = forward_sequence(g, steps, clusters, options, fixed);
        if (n >= 2) {
            Var p = predict(g, params_, slice_rows(trace.fused, 0, n - 1), slice_rows(trace.exercise, 1, n));
            parts.push_back(p);
            for (std::size_t t = 0; t + 1 < n; ++t) {
                const int target = static_cast<int>(batch.responses[off + t + 1]);
                result.targets.push_back(target);
                result.batch.probabilities[b * (L - 1) + t] = p.value()[t];
                result.batch.targets[b * (L - 1) + t] = target;
                result.batch.valid[b * (L - 1) + t] = 1;
            }
        }
        result.traces.push_back(std::move(trace));
    }
    if (!parts.empty()) result.predictions = parts.size() == 1 ? parts.front() : concat_rows(parts);
    return result;
}

LsktModel make_variant(const ModelConfig& config, std::size_t concept_vocab, std::size_t exercise_vocab) {
    config.validate();
    if (concept_vocab < 1 || exercise_vocab < 1) throw ConfigError("vocabularies must not be empty");
    return LsktModel(config, concept_vocab, exercise_vocab);
}

DataSplit split_for_config(const SequenceSet& data, const ModelConfig& config) {
    return split_by_learner(data, config.train_fraction, derive_seed(config.seed, {kSplitTag}));
}

TrainingState init_training_state(const ModelConfig& config, const SequenceSet& data) {
    LsktModel model = make_variant(config, data.concepts.size(), data.exercises.size());
    ClusterModel clusters;
    clusters.clusters = config.clusters;
    return TrainingState{std::move(model), OptimizerState{}, StatePool(config.pool_capacity), std::move(clusters), {}};
}

namespace {

std::string parameter_norms(const ParameterStore& store) {
    std::ostringstream out;
    for (const auto& name : store.names()) {
        double sq = 0.0;
        for (double v : store.value(name).data()) sq += v * v;
        out << "  " << name << " |w|=" << std::sqrt(sq) << "\n";
    }
    return out.str();
}

} // namespace

EvaluationOutput evaluate(LsktModel& model, const SequenceSet& data, const std::vector<std::size_t>& indices,
                          const ClusterModel& clusters) {
    EvaluationOutput out;
    const std::size_t bs = model.config().batch_size;
    for (std::size_t start = 0; start < indices.size(); start += bs) {
        std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(start),
                                       indices.begin() + static_cast<std::ptrdiff_t>(std::min(indices.size(), start + bs)));
        SequenceBatch batch = make_batch(data, chunk);
        Graph g(false);
        ForwardResult r = model.forward(g, batch, clusters, {});
        const auto p = r.probabilities();
        out.scores.insert(out.scores.end(), p.begin(), p.end());
        out.labels.insert(out.labels.end(), r.targets.begin(), r.targets.end());
    }
    out.metrics = evaluate_metrics(out.scores, out.labels);
    return out;
}

void train(TrainingState& state, const SequenceSet& data, const DataSplit& split, const EpochCallback& on_epoch,
           const BatchCallback& on_batch) {
    LsktModel& model = state.model;
    const ModelConfig& cfg = model.config();
    const bool uses_clusters = model.flags().learning_state_enhancement;
    const bool uses_pool = model.flags().learning_state_extraction;
    const AdamWOptions adam = cfg.adamw();
    if (split.train.empty()) throw DataError("training split is empty");
    std::vector<std::string> inactive;
    {
        const auto active = model.active_parameters();
        for (const auto& name : model.params().names()) {
            if (std::find(active.begin(), active.end(), name) == active.end()) inactive.push_back(name);
        }
    }

    for (std::size_t epoch = state.history.size() + 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = split.train;
        Rng shuffle(derive_seed(cfg.seed, {kShuffleTag, epoch}));
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);

        // Weighted by target count: the mean over every training target.
        double loss_sum = 0.0;
        std::size_t targets = 0;
        for (std::size_t start = 0, batch_no = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
            std::vector<std::size_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + cfg.batch_size)));
            SequenceBatch batch = make_batch(data, chunk);

            // Centers come from earlier batches only; this batch joins the
            // pool after its own forward pass.
            ClusterModel clusters;
            clusters.clusters = cfg.clusters;
            if (uses_clusters) {
                Rng km(derive_seed(cfg.seed, {kKmeansTag, epoch, batch_no}));
                clusters = kmeans_fit(state.pool, cfg.clusters, cfg.kmeans_iterations, km);
            }

            Rng step_rng(derive_seed(cfg.seed, {kStepTag, epoch, batch_no}));
            Graph g;
            ForwardResult r = model.forward(g, batch, clusters, {true, &step_rng, nullptr});
            if (r.target_count() == 0) continue;
            Var loss = bce_loss(r.predictions, r.targets);
            const double loss_value = loss.value().item();
            if (!std::isfinite(loss_value)) {
                throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batch_no) + "\nparameter norms:\n" + parameter_norms(model.params()));
            }
            if (on_batch) on_batch({epoch, batch_no, &batch, &clusters, &state.pool, &r});
            model.params().zero_grad();
            g.backward(loss);
            for (const auto& name : inactive) {
                for (double v : model.params().grad(name).data()) {
                    state.inactive_grad_max = std::max(state.inactive_grad_max, std::abs(v));
                }
            }
            model.params().clip_grad_norm(cfg.grad_clip);
            adamw_step(model.params(), state.optimizer, adam);
            if (uses_pool) state.pool.push_batch(r.learning_states());
            loss_sum += loss_value * static_cast<double>(r.target_count());
            targets += r.target_count();
        }
        model.params().zero_grad();

        state.clusters = ClusterModel{};
        state.clusters.clusters = cfg.clusters;
        if (uses_clusters) {
            Rng km(derive_seed(cfg.seed, {kEvalKmeansTag, epoch}));
            state.clusters = kmeans_fit(state.pool, cfg.clusters, cfg.kmeans_iterations, km);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = targets ? loss_sum / static_cast<double>(targets) : 0.0;
        rec.validation = evaluate(model, data, split.test, state.clusters).metrics;
        state.history.push_back(rec);
        if (on_epoch) on_epoch(state);
    }
}

void write_history_csv(const fs::path& path, const std::vector<EpochRecord>& history) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "epoch,train_loss,val_auc,val_acc,val_rmse,val_mae\n";
    char buf[256];
    for (const auto& h : history) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", h.epoch, h.train_loss, h.validation.auc,
                      h.validation.acc, h.validation.rmse, h.validation.mae);
        out << buf;
    }
}

std::vector<EpochRecord> read_history_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<EpochRecord> history;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        EpochRecord r;
        if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf,%lf,%lf", &r.epoch, &r.train_loss, &r.validation.auc,
                        &r.validation.acc, &r.validation.rmse, &r.validation.mae) != 6) {
            throw DataError("malformed history row '" + line + "'");
        }
        history.push_back(r);
    }
    return history;
}

void save_checkpoint(const fs::path& dir, const TrainingState& state) {
    fs::create_directories(dir);
    state.model.params().save(dir / "params");
    state.optimizer.save(dir / "optimizer");
    state.pool.save(dir / "pool");
    state.clusters.save(dir / "clusters");
    write_history_csv(dir / "history.csv", state.history);
    json meta{{"epochs_completed", state.history.size()},
              {"concept_vocab", state.model.concept_vocab()},
              {"exercise_vocab", state.model.exercise_vocab()}};
    json hist = json::array();
    for (const auto& h : state.history) {
        hist.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"validation", h.validation.to_json()}});
    }
    meta["history"] = hist;
    std::ofstream out(dir / "training_state.json", std::ios::trunc);
    out << meta.dump(2) << "\n";
}

void load_checkpoint(const fs::path& dir, TrainingState& state) {
    if (!fs::exists(dir / "params" / "index.json")) throw DataError("no checkpoint at " + dir.string());
    state.model.params().load_values(dir / "params");
    if (fs::exists(dir / "optimizer" / "index.json")) state.optimizer = OptimizerState::load(dir / "optimizer");
    if (fs::exists(dir / "pool" / "index.json")) {
        state.pool = StatePool::load(dir / "pool", state.model.config().pool_capacity);
    }
    if (fs::exists(dir / "clusters" / "index.json")) state.clusters = ClusterModel::load(dir / "clusters");
    state.history.clear();
    if (fs::exists(dir / "training_state.json")) {
        std::ifstream in(dir / "training_state.json");
        json meta = json::parse(in);
        for (const auto& h : meta.value("history", json::array())) {
            state.history.push_back({h.at("epoch").get<std::size_t>(), h.at("train_loss").get<double>(),
                                     MetricsReport::from_json(h.at("validation"))});
        }
    }
}

} // namespace lskt
