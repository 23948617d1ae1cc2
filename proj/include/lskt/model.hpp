#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lskt/data.hpp"
#include "lskt/embeddings.hpp"
#include "lskt/lse.hpp"
#include "lskt/metrics.hpp"
#include "lskt/numerics/adamw.hpp"
#include "lskt/numerics/graph.hpp"
#include "lskt/state_attention.hpp"

namespace lskt {

enum class Ablation { full, RLS, RLE, RKS };

std::string to_string(Ablation ablation);
// "full", "RLS", "RLE", "RKS" (case-insensitive). Throws ConfigError.
Ablation parse_ablation(std::string_view text);

// Which architectural components a variant keeps.
struct ComponentFlags {
    bool learning_state_extraction = true;
    bool learning_state_enhancement = true;
    bool knowledge_state_extraction = true;
};
ComponentFlags component_flags(Ablation ablation);

struct ModelConfig {
    std::size_t dim = 128;
    std::size_t max_length = 200;
    std::size_t kernel_size = 3;
    std::size_t pool_capacity = 16;
    std::size_t clusters = 4;
    double lr = 1e-3;
    std::size_t batch_size = 16;
    double dropout = 0.2;
    std::size_t epochs = 30;
    std::uint64_t seed = 42;
    IrtLevel irt_level = IrtLevel::ThreePL;
    Ablation ablation = Ablation::full;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip = 5.0;
    std::size_t kmeans_iterations = 10;
    bool guess_in_eval = false;
    double train_fraction = 0.8;

    // Throws ConfigError.
    void validate() const;
    nlohmann::json to_json() const;
    // Missing keys keep their defaults; unknown keys raise ConfigError.
    static ModelConfig from_json(const nlohmann::json& j);

    LseConfig lse() const { return {dim, kernel_size, {1, 2, 4}, dropout}; }
    VariantConfig variant() const { return {irt_level, guess_in_eval}; }
    AdamWOptions adamw() const { return {lr, beta1, beta2, adam_eps, weight_decay}; }
};

// Keys accepted by ModelConfig::from_json, in canonical order.
const std::vector<std::string>& model_config_keys();

namespace head {
inline const std::string fusion_weight = "head.W7";       // [2D,D]
inline const std::string fusion_bias = "head.W7.bias";    // [D]
inline const std::string predict_weight = "head.W8";      // [2D,1]
inline const std::string predict_bias = "head.W8.bias";   // [1]
} // namespace head

// Gradient-check and reporting groups.
enum class ParameterGroup { embeddings, lse, fusion, head };
std::string to_string(ParameterGroup group);
ParameterGroup parameter_group(const std::string& name);

struct PredictionBatch {
    Tensor probabilities;  // [B, L-1]; target t+1 at column t
    Mask valid;            // B·(L-1) flags
    Tensor targets;        // [B, L-1]
};

// Per-sequence intermediates, kept for inspection and export.
struct SequenceTrace {
    std::size_t valid_length = 0;
    Var exercise;        // x
    Var interaction;     // y
    Var learning_state;  // ŷ (unset when LSE is disabled)
    Var attention;       // γ (unset for RKS)
    Var knowledge;       // h (unset for RKS)
    Var fused;           // z
    std::vector<int> labels;
};

struct ForwardResult {
    // Probabilities for all valid targets of the batch, [N,1], in batch then
    // time order. Unset when the batch has no target.
    Var predictions;
    std::vector<int> targets;
    PredictionBatch batch;
    std::vector<SequenceTrace> traces;

    std::size_t target_count() const { return targets.size(); }
    // Detached ŷ of every sequence with LSE output (pool input).
    std::vector<Tensor> learning_states() const;
    std::vector<double> probabilities() const;
};

inline constexpr double kProbabilityClamp = 1e-7;

// Mean binary cross-entropy over the given predictions; predictions are
// clamped to [1e-7, 1 − 1e-7]. An empty set is a ContractError.
Var bce_loss(const Var& predictions, std::span<const int> targets);

// z = [h ∥ ŷ]·W7 + b7.
Var fuse(Graph& g, ParameterStore& store, const Var& knowledge, const Var& learning_state);
// r̂ = σ([z ∥ x_next]·W8 + b8).
Var predict(Graph& g, ParameterStore& store, const Var& fused, const Var& next_exercise);

struct ForwardOptions {
    bool train_mode = false;
    Rng* rng = nullptr;
    // Replaces computed cluster labels per sequence (used to freeze the
    // discrete assignment during finite differences).
    const std::vector<std::vector<int>>* fixed_labels = nullptr;
};

// The wired model for one (IRT level, ablation) variant.
class LsktModel {
public:
    LsktModel(ModelConfig config, std::size_t concept_vocab, std::size_t exercise_vocab);

    const ModelConfig& config() const noexcept { return config_; }
    ComponentFlags flags() const noexcept { return component_flags(config_.ablation); }
    ParameterStore& params() noexcept { return params_; }
    const ParameterStore& params() const noexcept { return params_; }
    std::size_t concept_vocab() const noexcept { return concept_vocab_; }
    std::size_t exercise_vocab() const noexcept { return exercise_vocab_; }

    // Parameters that the variant reads; all others receive zero gradient.
    std::vector<std::string> active_parameters() const;

    ForwardResult forward(Graph& g, const SequenceBatch& batch, const ClusterModel& clusters,
                          const ForwardOptions& options = {});

private:
    SequenceTrace forward_sequence(Graph& g, const StepIndices& steps, const ClusterModel& clusters,
                                   const ForwardOptions& options, const std::vector<int>* fixed_labels);

    ModelConfig config_;
    std::size_t concept_vocab_;
    std::size_t exercise_vocab_;
    ParameterStore params_;
};

// Validates the configuration and builds the variant it names.
LsktModel make_variant(const ModelConfig& config, std::size_t concept_vocab, std::size_t exercise_vocab);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    MetricsReport validation;
};

struct TrainingState {
    LsktModel model;
    OptimizerState optimizer;
    StatePool pool;
    ClusterModel clusters;  // snapshot used for evaluation
    std::vector<EpochRecord> history;
    // Largest |gradient| seen on a parameter the variant does not read.
    double inactive_grad_max = 0.0;
};

// The learner split every command uses for a given configuration.
DataSplit split_for_config(const SequenceSet& data, const ModelConfig& config);

TrainingState init_training_state(const ModelConfig& config, const SequenceSet& data);

using EpochCallback = std::function<void(const TrainingState&)>;

// One training batch, seen after its forward pass and before the optimizer
// step and pool update.
struct BatchEvent {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    const SequenceBatch* sequences = nullptr;
    const ClusterModel* clusters = nullptr;  // centers the batch was labelled with
    const StatePool* pool = nullptr;         // pool those centers were fitted from
    const ForwardResult* result = nullptr;
};
using BatchCallback = std::function<void(const BatchEvent&)>;

// Trains from epoch history.size()+1 through config.epochs. Per batch: fit
// clusters from the pool, forward, loss, backward, clip, AdamW, pool update.
// Per epoch: refit the evaluation clusters and score the test split.
// A non-finite loss raises NumericalError.
void train(TrainingState& state, const SequenceSet& data, const DataSplit& split, const EpochCallback& on_epoch = {},
           const BatchCallback& on_batch = {});

struct EvaluationOutput {
    MetricsReport metrics;
    std::vector<double> scores;
    std::vector<int> labels;
};

// Eval-mode scoring of the given sequences with a frozen cluster model.
EvaluationOutput evaluate(LsktModel& model, const SequenceSet& data, const std::vector<std::size_t>& indices,
                          const ClusterModel& clusters);

// Checkpoint directory: params/, optimizer/, pool/, clusters/, history.csv,
// training_state.json. config.json is written by the caller.
void save_checkpoint(const std::filesystem::path& dir, const TrainingState& state);
// Restores into a state built for the same configuration and data.
void load_checkpoint(const std::filesystem::path& dir, TrainingState& state);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);
std::vector<EpochRecord> read_history_csv(const std::filesystem::path& path);

} // namespace lskt
