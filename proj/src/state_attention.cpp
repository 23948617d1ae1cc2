#include "lskt/state_attention.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "lskt/numerics/errors.hpp"
#include "lskt/numerics/tensor_io.hpp"

namespace lskt {

StatePool::StatePool(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("state pool capacity must be >= 1");
}

void StatePool::push(Tensor states) {
    if (states.rank() != 2) throw DimensionError("pool entries must be [L,D], got " + shape_to_string(states.shape()));
    entries_.push_back(std::move(states));
    while (entries_.size() > capacity_) entries_.pop_front();
}

void StatePool::push_batch(const std::vector<Tensor>& batch_states) {
    for (const Tensor& s : batch_states) push(s);
}

std::size_t StatePool::vector_count() const {
    std::size_t n = 0;
    for (const Tensor& e : entries_) n += e.dim(0);
    return n;
}

void StatePool::save(const std::filesystem::path& dir) const {
    std::vector<NamedTensor> entries;
    for (std::size_t i = 0; i < entries_.size(); ++i) entries.push_back({"seq" + std::to_string(i), entries_[i], false});
    save_tensor_set(dir, entries, {{"capacity", capacity_}});
}

StatePool StatePool::load(const std::filesystem::path& dir, std::size_t capacity) {
    TensorSet set = load_tensor_set(dir);
    StatePool pool(capacity);
    for (auto& e : set.entries) pool.push(std::move(e.tensor));
    return pool;
}

void ClusterModel::save(const std::filesystem::path& dir) const {
    std::vector<NamedTensor> entries;
    for (std::size_t i = 0; i < centers.size(); ++i) entries.push_back({"center" + std::to_string(i), centers[i], false});
    save_tensor_set(dir, entries, {{"clusters", clusters}, {"fitted", fitted}});
}

ClusterModel ClusterModel::load(const std::filesystem::path& dir) {
    TensorSet set = load_tensor_set(dir);
    ClusterModel model;
    model.clusters = set.meta.value("clusters", std::size_t{0});
    model.fitted = set.meta.value("fitted", false);
    for (auto& e : set.entries) model.centers.push_back(std::move(e.tensor));
    if (model.fitted && model.centers.size() != model.clusters) {
        throw DataError("cluster file lists " + std::to_string(model.centers.size()) + " centers for n=" +
                        std::to_string(model.clusters));
    }
    return model;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

std::size_t nearest(std::span<const double> point, const std::vector<Tensor>& centers, double* dist = nullptr) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const double d = squared_distance(point, centers[i].data());
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    if (dist) *dist = best_d;
    return best;
}

} // namespace

ClusterModel kmeans_fit(const StatePool& pool, std::size_t clusters, std::size_t iterations, Rng& rng) {
    if (clusters == 0) throw ConfigError("cluster count must be >= 1");
    ClusterModel model;
    model.clusters = clusters;
    if (pool.vector_count() < clusters * kMinPointsPerCluster) return model;

    std::vector<std::span<const double>> points;
    for (const Tensor& e : pool.entries()) {
        for (std::size_t r = 0; r < e.dim(0); ++r) points.push_back(e.row(r));
    }
    const std::size_t D = points.front().size();

    // Partial Fisher-Yates for n distinct starting points.
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < clusters; ++i) {
        const std::size_t j = i + rng.below(order.size() - i);
        std::swap(order[i], order[j]);
    }
    std::vector<Tensor> centers;
    for (std::size_t i = 0; i < clusters; ++i) {
        const auto p = points[order[i]];
        centers.emplace_back(Shape{D}, std::vector<double>(p.begin(), p.end()));
    }

    std::vector<std::size_t> assignment(points.size());
    std::vector<double> distance(points.size());
    for (std::size_t iter = 0; iter < iterations; ++iter) {
        for (std::size_t p = 0; p < points.size(); ++p) assignment[p] = nearest(points[p], centers, &distance[p]);

        std::vector<Tensor> sums(clusters, Tensor({D}, 0.0));
        std::vector<std::size_t> counts(clusters, 0);
        for (std::size_t p = 0; p < points.size(); ++p) {
            auto& s = sums[assignment[p]];
            for (std::size_t j = 0; j < D; ++j) s[j] += points[p][j];
            ++counts[assignment[p]];
        }
        for (std::size_t c = 0; c < clusters; ++c) {
            if (counts[c] == 0) {
                // Reseed at the point farthest from its own center.
                std::size_t far = 0;
                for (std::size_t p = 1; p < points.size(); ++p)
                    if (distance[p] > distance[far]) far = p;
                centers[c] = Tensor({D}, std::vector<double>(points[far].begin(), points[far].end()));
                distance[far] = -1.0;
                continue;
            }
            for (std::size_t j = 0; j < D; ++j) centers[c][j] = sums[c][j] / static_cast<double>(counts[c]);
        }
    }
    model.centers = std::move(centers);
    model.fitted = true;
    return model;
}

std::vector<int> assign_labels(const Tensor& states, const ClusterModel& model, const Mask& valid) {
    if (!model.fitted) throw ContractError("assign_labels on an unfitted cluster model");
    if (states.rank() != 2) throw DimensionError("assign_labels expects [L,D], got " + shape_to_string(states.shape()));
    const std::size_t L = states.dim(0);
    if (valid.size() != L) throw DimensionError("valid mask length differs from sequence length");
    std::vector<int> labels(L, kUnassignedLabel);
    for (std::size_t t = 0; t < L; ++t) {
        if (valid[t]) labels[t] = static_cast<int>(nearest(states.row(t), model.centers));
    }
    return labels;
}

std::vector<int> attention_labels(const Tensor& states, const ClusterModel& model) {
    if (!model.fitted) return std::vector<int>(states.dim(0), 0);
    return assign_labels(states, model, Mask(states.dim(0), 1));
}

Var state_similarity(const Var& states) {
    const double D = static_cast<double>(states.value().last_dim());
    return scale(matmul(states, transpose(states)), 1.0 / std::sqrt(D));
}

MaskedScores cluster_mask(const Var& similarity, const std::vector<int>& labels) {
    const std::size_t L = labels.size();
    if (similarity.shape() != Shape{L, L}) {
        throw DimensionError("cluster_mask: scores " + shape_to_string(similarity.shape()) + " vs " +
                             std::to_string(L) + " labels");
    }
    Mask keep(L * L, 0);
    for (std::size_t t = 0; t < L; ++t)
        for (std::size_t s = 0; s < L; ++s) keep[t * L + s] = labels[t] == labels[s] ? 1 : 0;
    return {similarity, std::move(keep)};
}

Mask causal_mask(std::size_t length) {
    Mask keep(length * length, 0);
    for (std::size_t t = 0; t < length; ++t)
        for (std::size_t s = 0; s <= t; ++s) keep[t * length + s] = 1;
    return keep;
}

Var exercise_attention(const Var& exercise) {
    const std::size_t L = exercise.value().dim(0);
    const double D = static_cast<double>(exercise.value().last_dim());
    Var scores = scale(matmul(exercise, transpose(exercise)), 1.0 / std::sqrt(D));
    return masked_softmax(scores, causal_mask(L));
}

Var combined_attention(const Var& exercise, const MaskedScores& state_scores) {
    const std::size_t L = exercise.value().dim(0);
    if (state_scores.logits.shape() != Shape{L, L} || state_scores.keep.size() != L * L) {
        throw DimensionError("combined_attention: state scores must be " + std::to_string(L) + "x" + std::to_string(L));
    }
    Mask keep = causal_mask(L);
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = keep[i] && state_scores.keep[i];
    for (std::size_t t = 0; t < L; ++t) {
        if (!keep[t * L + t]) throw ContractError("combined_attention: diagonal of the state branch is masked");
    }
    return add(exercise_attention(exercise), masked_softmax(state_scores.logits, keep));
}

Var knowledge_state(const Var& attention, const Var& interaction) { return matmul(attention, interaction); }

} // namespace lskt
