#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <limits>
#include <vector>

#include "lskt/numerics/graph.hpp"
#include "lskt/numerics/ops.hpp"
#include "lskt/numerics/rng.hpp"

namespace lskt {

// Bounded FIFO of recent learners' learning-state sequences. Entries are
// detached values [L_valid, D]; the oldest is evicted first.
class StatePool {
public:
    explicit StatePool(std::size_t capacity);

    void push(Tensor states);
    void push_batch(const std::vector<Tensor>& batch_states);

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const std::deque<Tensor>& entries() const noexcept { return entries_; }
    // Number of pooled state vectors (sum of rows over entries).
    std::size_t vector_count() const;

    void save(const std::filesystem::path& dir) const;
    static StatePool load(const std::filesystem::path& dir, std::size_t capacity);

private:
    std::size_t capacity_;
    std::deque<Tensor> entries_;
};

inline constexpr int kUnassignedLabel = -1;
// Minimum pooled vectors per cluster before centers are fitted.
inline constexpr std::size_t kMinPointsPerCluster = 5;

struct ClusterModel {
    std::vector<Tensor> centers;  // each [D]
    std::size_t clusters = 0;
    bool fitted = false;

    void save(const std::filesystem::path& dir) const;
    static ClusterModel load(const std::filesystem::path& dir);
};

// Lloyd's algorithm with a fixed iteration count. Initial centers are n
// distinct pooled points drawn with `rng`; an emptied cluster is reseeded at
// the point farthest from its assigned center. Returns an unfitted model when
// the pool holds fewer than n·5 vectors.
ClusterModel kmeans_fit(const StatePool& pool, std::size_t clusters, std::size_t iterations, Rng& rng);

// Nearest center by Euclidean distance, ties to the lowest index. Rows with
// valid[t] == 0 get kUnassignedLabel. An unfitted model is a ContractError.
std::vector<int> assign_labels(const Tensor& states, const ClusterModel& model, const Mask& valid);

// Labels for attention: assign_labels when fitted, otherwise one shared
// label for every step (the cluster mask then keeps everything).
std::vector<int> attention_labels(const Tensor& states, const ClusterModel& model);

// β[t,τ] = ŷ_t·ŷ_τ / √D.
Var state_similarity(const Var& states);

// Logits with the keep-mask consumed by masked_softmax; a masked entry
// stands for −∞.
struct MaskedScores {
    Var logits;
    Mask keep;
};

// Keeps entry (t,τ) iff labels[t] == labels[τ].
MaskedScores cluster_mask(const Var& similarity, const std::vector<int>& labels);

// Lower-triangular (τ ≤ t) keep-mask for an L×L score matrix.
Mask causal_mask(std::size_t length);

// γ = causal softmax(x·xᵀ/√D) + causal masked softmax(β). Rows carry mass 2;
// entries above the diagonal are exactly 0.
Var combined_attention(const Var& exercise, const MaskedScores& state_scores);

// Exercise branch only (used by ablations without state enhancement). Row mass 1.
Var exercise_attention(const Var& exercise);

// h_t = Σ_τ γ[t,τ]·y_τ.
Var knowledge_state(const Var& attention, const Var& interaction);

} // namespace lskt
