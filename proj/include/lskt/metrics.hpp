#pragma once

#include <cstddef>
#include <span>

#include <json.hpp>

namespace lskt {

struct MetricsReport {
    double auc = 0.0;
    double acc = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t n_pairs = 0;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
};

// Exact Mann–Whitney AUC with half credit for ties (sort + tie groups).
// Throws ContractError ("undefined AUC") when only one class is present.
double auc(std::span<const double> scores, std::span<const int> labels);

// Predicts 1 iff score > threshold (strict).
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);
double rmse(std::span<const double> scores, std::span<const int> labels);
double mae(std::span<const double> scores, std::span<const int> labels);

MetricsReport evaluate_metrics(std::span<const double> scores, std::span<const int> labels);

} // namespace lskt
