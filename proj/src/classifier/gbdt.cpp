#include <cmath>
#include <numeric>
#include <random>

#include "aact/classifier.hpp"
#include "aact/errors.hpp"
#include "tree_builder.hpp"

namespace aact {

ModelArtifact train_gbdt(const TrainingSet& data, const GbdtParams& params) {
    detail::check_training_data(data);
    if (params.n_trees < 0 || params.max_depth < 1 || params.learning_rate <= 0 ||
        params.subsample <= 0 || params.subsample > 1 || params.min_samples_leaf < 1) {
        throw std::invalid_argument("invalid gradient boosting parameters");
    }
    const std::size_t n = data.rows();
    const auto columns = detail::ColumnData::build(data);

    GbdtModel model;
    model.params = params;
    const double prior = static_cast<double>(data.positives()) / static_cast<double>(n);
    model.base_margin = std::log(prior / (1.0 - prior));

    std::vector<double> margins(n, model.base_margin);
    std::vector<double> residual(n), hessian(n), weight(n, 1.0);
    std::mt19937_64 rng(params.seed);
    const auto in_bag = static_cast<std::size_t>(std::floor(params.subsample * static_cast<double>(n)));
    std::vector<std::size_t> perm(n);

    detail::TreeBuildParams tree_params;
    tree_params.max_depth = params.max_depth;
    tree_params.min_leaf_weight = params.min_samples_leaf;
    tree_params.leaf_rule = detail::LeafRule::Newton;
    tree_params.value_scale = params.learning_rate;

    model.trees.reserve(static_cast<std::size_t>(params.n_trees));
    for (int stage = 0; stage < params.n_trees; ++stage) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margins[i]);
            residual[i] = data.label(i) - p;
            hessian[i] = p * (1.0 - p);
        }
        if (in_bag < n) {
            // Partial Fisher-Yates: the first in_bag entries are the sample.
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            for (std::size_t k = 0; k < in_bag; ++k) {
                std::swap(perm[k], perm[k + detail::uniform_index(rng, n - k)]);
            }
            std::fill(weight.begin(), weight.end(), 0.0);
            for (std::size_t k = 0; k < in_bag; ++k) weight[perm[k]] = 1.0;
        }
        RegressionTree tree = detail::build_tree(columns, residual, hessian, weight, tree_params);
        for (std::size_t i = 0; i < n; ++i) margins[i] += tree.predict(data.row(i));
        model.trees.push_back(std::move(tree));
    }
    return ModelArtifact{data.feature_names(), std::move(model)};
}

}  // namespace aact
