#include <cmath>
#include <random>

#include "aact/classifier.hpp"
#include "aact/errors.hpp"
#include "tree_builder.hpp"

namespace aact {

// Bagged classification trees. Squared-error splits on 0/1 targets are the
// Gini criterion; leaves hold the bootstrap fraction of positives and the
// forest averages them.
ModelArtifact train_forest(const TrainingSet& data, const ForestParams& params) {
    detail::check_training_data(data);
    if (params.n_trees < 1 || params.max_depth < 1 || params.min_samples_leaf < 1) {
        throw std::invalid_argument("invalid forest parameters");
    }
    const std::size_t n = data.rows();
    const auto columns = detail::ColumnData::build(data);
    std::vector<double> target(n), unused(n, 0.0), weight(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = data.label(i);

    detail::TreeBuildParams tree_params;
    tree_params.max_depth = params.max_depth;
    tree_params.min_leaf_weight = params.min_samples_leaf;
    tree_params.leaf_rule = detail::LeafRule::Mean;
    tree_params.max_features = params.max_features > 0
                                   ? params.max_features
                                   : std::max(1, static_cast<int>(std::lround(std::sqrt(data.width()))));

    ForestModel model;
    model.params = params;
    std::mt19937_64 rng(params.seed);
    for (int t = 0; t < params.n_trees; ++t) {
        std::fill(weight.begin(), weight.end(), 0.0);
        for (std::size_t k = 0; k < n; ++k) weight[detail::uniform_index(rng, n)] += 1.0;
        model.trees.push_back(detail::build_tree(columns, target, unused, weight, tree_params, &rng));
    }
    return ModelArtifact{data.feature_names(), std::move(model)};
}

}  // namespace aact
