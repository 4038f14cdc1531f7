#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "aact/classifier.hpp"
#include "aact/errors.hpp"
#include "aact/evaluation.hpp"
#include "aact/logistic.hpp"
#include "aact/random.hpp"

using namespace aact;

namespace {

TrainingSet separable_1d(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TrainingSet data({"x"});
    for (std::size_t i = 0; i < n; ++i) {
        const double x = uniform_real(rng, -1.0, 1.0);
        data.add(std::vector<double>{x}, x >= 0 ? 1 : 0, static_cast<double>(i));
    }
    return data;
}

TrainingSet xor_cells(std::size_t per_cell) {
    TrainingSet data({"a", "b"});
    std::mt19937_64 rng(3);
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            for (std::size_t i = 0; i < per_cell; ++i) {
                const std::vector<double> x{a + uniform_real(rng, -0.2, 0.2), b + uniform_real(rng, -0.2, 0.2)};
                data.add(x, a ^ b);
            }
        }
    }
    return data;
}

TrainingSet noisy(std::size_t n, std::size_t width, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < width; ++j) names.push_back("f" + std::to_string(j));
    TrainingSet data(names);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(width);
        for (auto& v : x) v = uniform_real(rng, -2.0, 2.0);
        const double z = 1.5 * x[0] - x[1] + 0.5 * x[0] * x[width - 1];
        data.add(x, unit_uniform(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1 : 0, static_cast<double>(i));
    }
    return data;
}

double training_auc(const ModelArtifact& m, const TrainingSet& data) {
    return roc_auc(predict_all(m, data), data.labels());
}

}  // namespace

TEST(Gbdt, SeparableDataHasPerfectAuc) {
    const TrainingSet data = separable_1d(200, 1);
    EXPECT_EQ(training_auc(train_gbdt(data), data), 1.0);
}

TEST(Gbdt, LearnsXorWithDepthTwo) {
    const TrainingSet data = xor_cells(50);
    GbdtParams p;
    p.max_depth = 2;
    const ModelArtifact m = train_gbdt(data, p);
    for (double a : {0.0, 1.0}) {
        for (double b : {0.0, 1.0}) {
            const std::vector<double> x{a, b};
            EXPECT_EQ(predict(m, x) >= 0.5 ? 1 : 0, static_cast<int>(a) ^ static_cast<int>(b));
        }
    }
    const auto report = compute_metrics(predict_all(m, data), data.labels());
    EXPECT_EQ(report.accuracy, 1.0);
}

TEST(Gbdt, RejectsDegenerateInput) {
    TrainingSet same({"x"});
    for (int i = 0; i < 10; ++i) same.add(std::vector<double>{double(i)}, 1);
    EXPECT_THROW(train_gbdt(same), DegenerateLabels);
    EXPECT_THROW(train_logistic(same), DegenerateLabels);
    EXPECT_THROW(train_forest(same), DegenerateLabels);
    EXPECT_THROW(train_gbdt(TrainingSet({"x"})), EmptyData);
}

TEST(Gbdt, DefaultParameters) {
    const GbdtParams p;
    EXPECT_EQ(p.n_trees, 100);
    EXPECT_EQ(p.max_depth, 3);
    EXPECT_EQ(p.learning_rate, 0.1);
    EXPECT_EQ(p.subsample, 1.0);
    EXPECT_EQ(p.min_samples_leaf, 20);
}

TEST(Gbdt, TrainingLossNeverIncreases) {
    const TrainingSet data = noisy(600, 4, 8);
    for (double subsample : {1.0, 0.7}) {
        GbdtParams p;
        p.subsample = subsample;
        p.seed = 5;
        const auto losses = staged_log_loss(train_gbdt(data, p), data);
        ASSERT_EQ(losses.size(), 101u);
        if (subsample < 1.0) continue;  // only full-batch stages are guaranteed monotone
        for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LE(losses[i], losses[i - 1] + 1e-12) << i;
    }
}

TEST(Gbdt, DeterministicUnderSeed) {
    const TrainingSet data = noisy(500, 5, 9);
    GbdtParams p;
    p.subsample = 0.8;
    p.seed = 42;
    EXPECT_EQ(serialize(train_gbdt(data, p)), serialize(train_gbdt(data, p)));
    ForestParams fp;
    fp.seed = 42;
    EXPECT_EQ(serialize(train_forest(data, fp)), serialize(train_forest(data, fp)));
}

TEST(Gbdt, MinimumLeafSizeHolds) {
    const TrainingSet data = noisy(300, 3, 10);
    const ModelArtifact m = train_gbdt(data);
    const auto& gbdt = std::get<GbdtModel>(m.model);
    for (const auto& tree : gbdt.trees) {
        std::vector<std::size_t> counts(tree.nodes.size());
        for (std::size_t i = 0; i < data.rows(); ++i) ++counts[tree.leaf_index(data.row(i))];
        for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
            if (tree.nodes[n].is_leaf()) EXPECT_GE(counts[n], 20u);
        }
        EXPECT_LE(tree.depth(), 3u);
    }
}

TEST(Predict, EmptyEnsembleIsOneHalf) {
    ModelArtifact m;
    m.feature_names = {"x"};
    m.model = GbdtModel{};
    EXPECT_EQ(predict(m, std::vector<double>{3.0}), 0.5);
}

TEST(Predict, ConfidentDeepInsideClassOne) {
    const ModelArtifact m = train_gbdt(separable_1d(200, 2));
    EXPECT_GT(predict(m, std::vector<double>{0.9}), 0.9);
    EXPECT_LT(predict(m, std::vector<double>{-0.9}), 0.1);
}

TEST(Predict, WrongWidthThrows) {
    const ModelArtifact m = train_gbdt(separable_1d(100, 3));
    EXPECT_THROW(predict(m, std::vector<double>{1.0, 2.0}), DimensionMismatch);
}

TEST(Predict, StrictlyInsideUnitInterval) {
    // Huge margins must still give probabilities strictly between 0 and 1.
    LogisticModel lm;
    lm.bias = 0;
    lm.weights = {1e6};
    lm.means = {0};
    lm.scales = {1};
    ModelArtifact m;
    m.feature_names = {"x"};
    m.model = lm;
    for (double x : {-1e3, -1.0, 0.0, 1.0, 1e3}) {
        const double p = predict(m, std::vector<double>{x});
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
    const ModelArtifact f = train_forest(separable_1d(200, 4));
    for (double x : {-1.0, 1.0}) {
        const double p = predict(f, std::vector<double>{x});
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
}

TEST(Logistic, SeparableDataHasPerfectAuc) {
    const TrainingSet data = separable_1d(200, 5);
    EXPECT_EQ(training_auc(train_logistic(data), data), 1.0);
}

TEST(Logistic, GradientMatchesCentralDifferences) {
    const TrainingSet data = noisy(300, 4, 11);
    const LogisticObjective objective(data, 0.05);
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> w(objective.dimension());
        for (auto& v : w) v = uniform_real(rng, -2.0, 2.0);
        const auto g = objective.gradient(w);
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(w[j]));
            auto plus = w, minus = w;
            plus[j] += h;
            minus[j] -= h;
            const double fd = (objective.loss(plus) - objective.loss(minus)) / (2 * h);
            EXPECT_LE(std::abs(g[j] - fd), 1e-6 * std::max(1.0, std::abs(g[j]))) << "trial " << trial << " j " << j;
        }
    }
}

TEST(Logistic, ConstantFeaturesPredictThePrior) {
    TrainingSet data({"a", "b"});
    for (int i = 0; i < 400; ++i) data.add(std::vector<double>{1.0, -3.0}, i % 4 == 0 ? 1 : 0);
    const ModelArtifact m = train_logistic(data);
    EXPECT_NEAR(predict(m, std::vector<double>{1.0, -3.0}), 0.25, 1e-3);
}

TEST(Forest, SeparableDataHasPerfectAuc) {
    const TrainingSet data = separable_1d(200, 6);
    EXPECT_EQ(training_auc(train_forest(data), data), 1.0);
}

TEST(Attribution, SingleSplitCreditsItsFeature) {
    GbdtModel g;
    RegressionTree tree;
    tree.nodes = {TreeNode{2, 0.5, 1, 2, 0.1}, TreeNode{-1, 0, -1, -1, -0.4}, TreeNode{-1, 0, -1, -1, 0.7}};
    g.trees.push_back(tree);
    g.base_margin = -0.3;
    ModelArtifact m;
    m.feature_names = {"a", "b", "c"};
    m.model = g;
    for (double c : {0.0, 1.0}) {
        const std::vector<double> x{9.0, -9.0, c};
        const Attribution at = attribute(m, x);
        EXPECT_EQ(at.contributions[0], 0.0);
        EXPECT_EQ(at.contributions[1], 0.0);
        EXPECT_NE(at.contributions[2], 0.0);
        EXPECT_NEAR(at.base_value + at.contributions[2], margin(m, x), 1e-12);
    }
}

TEST(Attribution, LogisticAtTheMeanIsZero) {
    const TrainingSet data = noisy(300, 3, 13);
    const ModelArtifact m = train_logistic(data);
    const auto& lm = std::get<LogisticModel>(m.model);
    std::vector<double> x = lm.means;
    x[1] += 0.7;
    const Attribution at = attribute(m, x);
    EXPECT_EQ(at.contributions[0], 0.0);
    EXPECT_EQ(at.contributions[2], 0.0);
    EXPECT_NE(at.contributions[1], 0.0);
}

TEST(Attribution, CompletenessOnRandomEnsembles) {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 5; ++trial) {
        const TrainingSet data = noisy(400, 6, 100 + static_cast<std::uint64_t>(trial));
        GbdtParams p;
        p.n_trees = 30;
        p.max_depth = 4;
        p.min_samples_leaf = 5;
        for (const ModelArtifact& m : {train_gbdt(data, p), train_logistic(data)}) {
            for (int i = 0; i < 200; ++i) {
                std::vector<double> x(6);
                for (auto& v : x) v = uniform_real(rng, -3.0, 3.0);
                const Attribution at = attribute(m, x);
                double sum = at.base_value;
                for (double c : at.contributions) sum += c;
                EXPECT_NEAR(sum, margin(m, x), 1e-9);
            }
        }
    }
}

TEST(Attribution, ForestUnsupported) {
    const ModelArtifact f = train_forest(separable_1d(100, 15));
    EXPECT_THROW(attribute(f, std::vector<double>{0.3}), UnsupportedModel);
}

TEST(Serialize, RoundTripPredictsBitExactly) {
    const TrainingSet data = noisy(500, 5, 16);
    std::mt19937_64 rng(17);
    for (const ModelArtifact& m : {train_gbdt(data), train_logistic(data), train_forest(data)}) {
        const std::string bytes = serialize(m);
        const ModelArtifact back = deserialize(bytes);
        EXPECT_EQ(back, m);
        EXPECT_EQ(serialize(back), bytes);
        for (int i = 0; i < 1000; ++i) {
            std::vector<double> x(5);
            for (auto& v : x) v = uniform_real(rng, -4.0, 4.0);
            ASSERT_EQ(predict(back, x), predict(m, x));
        }
    }
}

TEST(Serialize, TruncatedPayloadIsCorrupt) {
    const std::string bytes = serialize(train_gbdt(separable_1d(100, 18)));
    for (std::size_t cut : {std::size_t{0}, std::size_t{10}, bytes.size() / 2, bytes.size() - 3}) {
        EXPECT_THROW(deserialize(bytes.substr(0, cut)), CorruptArtifact) << cut;
    }
}

TEST(Serialize, FutureVersionIsRejected) {
    auto j = nlohmann::json::parse(serialize(train_gbdt(separable_1d(100, 19))));
    j["version"] = j["version"].get<int>() + 1;
    EXPECT_THROW(deserialize(j.dump()), VersionMismatch);
}

TEST(Serialize, StructuralDamageIsCorrupt) {
    auto j = nlohmann::json::parse(serialize(train_gbdt(separable_1d(100, 20))));
    j["trees"][0]["left"][0] = 0;  // a cycle back to the root
    EXPECT_THROW(deserialize(j.dump()), CorruptArtifact);
}

TEST(PermutationImportance, RanksTheSignal) {
    const TrainingSet data = noisy(800, 4, 21);
    const auto importance = permutation_importance(train_gbdt(data), data, 3);
    ASSERT_EQ(importance.size(), 4u);
    EXPECT_GT(importance[0], importance[2]);
    EXPECT_GT(importance[1], importance[2]);
}
