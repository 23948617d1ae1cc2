#include <gtest/gtest.h>

#include "lskt/metrics.hpp"
#include "lskt/numerics/errors.hpp"
#include "oracles.hpp"

using namespace lskt;

namespace {

struct Sample {
    std::vector<double> s;
    std::vector<int> y;
};

// Scores on a coarse grid so ties are common.
Sample random_sample(std::size_t n, Rng& rng) {
    Sample out;
    for (std::size_t i = 0; i < n; ++i) {
        out.s.push_back(static_cast<double>(rng.below(11)) / 10.0);
        out.y.push_back(i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2)));
    }
    return out;
}

} // namespace

TEST(Auc, HandCases) {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    EXPECT_EQ(auc(s, std::vector<int>{0, 1, 0, 1}), 1.0);
    EXPECT_EQ(auc(s, std::vector<int>{1, 0, 1, 0}), 0.0);
    EXPECT_EQ(auc(std::vector<double>(6, 0.3), std::vector<int>{0, 1, 0, 1, 1, 0}), 0.5);
    EXPECT_DOUBLE_EQ(auc(s, std::vector<int>{0, 0, 1, 1}), 0.75);
}

TEST(Auc, SingleClassIsUndefined) {
    try {
        auc(std::vector<double>{0.2, 0.9}, std::vector<int>{1, 1});
        FAIL();
    } catch (const ContractError& e) {
        EXPECT_NE(std::string(e.what()).find("undefined AUC"), std::string::npos);
    }
}

TEST(Auc, MatchesPairwiseOracleWithTies) {
    Rng rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        const Sample d = random_sample(50, rng);
        EXPECT_NEAR(auc(d.s, d.y), oracle::pairwise_auc(d.s, d.y), 1e-12);
    }
}

TEST(Auc, InvariantUnderIncreasingTransforms) {
    Rng rng(2);
    const Sample d = random_sample(80, rng);
    const double base = auc(d.s, d.y);
    std::vector<double> sig, aff;
    for (double v : d.s) {
        sig.push_back(oracle::sigmoid(3.0 * v - 1.0));
        aff.push_back(7.5 * v + 2.0);
    }
    EXPECT_EQ(auc(sig, d.y), base);
    EXPECT_EQ(auc(aff, d.y), base);
}

TEST(Accuracy, StrictThreshold) {
    EXPECT_EQ(accuracy(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}), 1.0);
    EXPECT_EQ(accuracy(std::vector<double>(4, 0.5), std::vector<int>(4, 0)), 1.0);
    EXPECT_EQ(accuracy(std::vector<double>(4, 0.5), std::vector<int>(4, 1)), 0.0);
}

TEST(Accuracy, MatchesLoopOracle) {
    Rng rng(3);
    const Sample d = random_sample(100, rng);
    double hits = 0.0;
    for (std::size_t i = 0; i < 100; ++i) hits += ((d.s[i] > 0.5) ? 1 : 0) == d.y[i];
    EXPECT_NEAR(accuracy(d.s, d.y), hits / 100.0, 1e-15);
}

TEST(ErrorMetrics, HandCases) {
    const std::vector<int> y{1, 0, 1};
    const std::vector<double> exact{1.0, 0.0, 1.0};
    EXPECT_EQ(rmse(exact, y), 0.0);
    EXPECT_EQ(mae(exact, y), 0.0);
    EXPECT_EQ(rmse(std::vector<double>(5, 0.5), std::vector<int>(5, 1)), 0.5);
    EXPECT_EQ(mae(std::vector<double>(5, 0.5), std::vector<int>(5, 1)), 0.5);
}

TEST(ErrorMetrics, FormulaOracleAndPowerMeanInequality) {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> s;
        std::vector<int> y;
        for (int i = 0; i < 60; ++i) {
            s.push_back(rng.uniform());
            y.push_back(static_cast<int>(rng.below(2)));
        }
        double sq = 0.0, ab = 0.0;
        for (int i = 0; i < 60; ++i) {
            sq += (s[i] - y[i]) * (s[i] - y[i]);
            ab += std::abs(s[i] - y[i]);
        }
        EXPECT_NEAR(rmse(s, y), std::sqrt(sq / 60.0), 1e-12);
        EXPECT_NEAR(mae(s, y), ab / 60.0, 1e-12);
        EXPECT_GE(rmse(s, y), mae(s, y));
    }
}

TEST(Report, FieldsAndJsonRoundTrip) {
    Rng rng(5);
    const Sample d = random_sample(40, rng);
    const MetricsReport r = evaluate_metrics(d.s, d.y);
    EXPECT_EQ(r.n_pairs, 40u);
    EXPECT_EQ(r.auc, auc(d.s, d.y));
    EXPECT_EQ(r.acc, accuracy(d.s, d.y));
    EXPECT_GE(r.rmse, r.mae);
    const MetricsReport back = MetricsReport::from_json(r.to_json());
    EXPECT_EQ(back.auc, r.auc);
    EXPECT_EQ(back.rmse, r.rmse);
    EXPECT_EQ(back.n_pairs, r.n_pairs);
    const auto j = r.to_json();
    for (const char* key : {"auc", "acc", "rmse", "mae", "n_pairs"}) EXPECT_TRUE(j.contains(key)) << key;
}
