#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "aact/classifier.hpp"
#include "aact/random.hpp"

namespace aact::detail {

/// Column-major copy of a training set with each column's row order
/// presorted by value, shared by every tree grown on the same data.
struct ColumnData {
    std::size_t rows = 0;
    std::size_t width = 0;
    std::vector<std::vector<double>> columns;
    std::vector<std::vector<std::uint32_t>> order;

    static ColumnData build(const TrainingSet& data);
};

enum class LeafRule : std::uint8_t {
    /// sum(w g) / sum(w h): one Newton step on the logistic loss.
    Newton,
    /// sum(w g) / sum(w): weighted mean of the targets.
    Mean,
};

struct TreeBuildParams {
    int max_depth = 3;
    double min_leaf_weight = 1.0;
    /// Features examined per node; 0 examines all of them.
    int max_features = 0;
    LeafRule leaf_rule = LeafRule::Newton;
    /// Multiplies every node value (the learning rate for boosting).
    double value_scale = 1.0;
};

/// Grows one tree level by level with exact greedy splits: every distinct
/// value boundary of every feature is scored by squared-error reduction on
/// the targets `g` under row weights `w` (zero weight excludes a row).
/// Ties keep the lowest feature index and the lowest threshold.
RegressionTree build_tree(const ColumnData& data, std::span<const double> g, std::span<const double> h,
                          std::span<const double> w, const TreeBuildParams& params,
                          std::mt19937_64* rng = nullptr);

using aact::uniform_index;
using aact::unit_uniform;

void check_training_data(const TrainingSet& data);

}  // namespace aact::detail
