#include "lskt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lskt/numerics/errors.hpp"

namespace lskt {

namespace {

void check_pairs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DimensionError("scores and labels differ in length");
    if (scores.empty()) throw ContractError("metrics need at least one prediction");
}

} // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
    check_pairs(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Rank sum of positives with averaged ranks inside tie groups.
    double positive_rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                positive_rank_sum += avg_rank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = scores.size() - positives;
    if (positives == 0 || negatives == 0) throw ContractError("undefined AUC: only one class present");
    const double np = static_cast<double>(positives), nn = static_cast<double>(negatives);
    return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_pairs(scores, labels);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int predicted = scores[i] > threshold ? 1 : 0;
        hits += predicted == labels[i];
    }
    return static_cast<double>(hits) / static_cast<double>(scores.size());
}

double rmse(std::span<const double> scores, std::span<const int> labels) {
    check_pairs(scores, labels);
    double sq = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double d = scores[i] - labels[i];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(scores.size()));
}

double mae(std::span<const double> scores, std::span<const int> labels) {
    check_pairs(scores, labels);
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) total += std::abs(scores[i] - labels[i]);
    return total / static_cast<double>(scores.size());
}

MetricsReport evaluate_metrics(std::span<const double> scores, std::span<const int> labels) {
    MetricsReport r;
    r.auc = auc(scores, labels);
    r.acc = accuracy(scores, labels);
    r.rmse = rmse(scores, labels);
    r.mae = mae(scores, labels);
    r.n_pairs = scores.size();
    return r;
}

nlohmann::json MetricsReport::to_json() const {
    return {{"auc", auc}, {"acc", acc}, {"rmse", rmse}, {"mae", mae}, {"n_pairs", n_pairs}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.auc = j.at("auc").get<double>();
    r.acc = j.at("acc").get<double>();
    r.rmse = j.at("rmse").get<double>();
    r.mae = j.at("mae").get<double>();
    r.n_pairs = j.at("n_pairs").get<std::size_t>();
    return r;
}

} // namespace lskt
