#include "aact/classifier.hpp"
#include "aact/errors.hpp"

namespace aact {

Attribution attribute(const ModelArtifact& model, std::span<const double> features) {
    if (features.size() != model.width()) throw DimensionMismatch("attribution input width");
    Attribution out;
    out.contributions.assign(model.width(), 0.0);

    if (const auto* gbdt = std::get_if<GbdtModel>(&model.model)) {
        // Path attribution: walking from the root, each split moves the
        // prediction from the parent's value to the child's; that change is
        // credited to the split feature. The root values form the base.
        out.base_value = gbdt->base_margin;
        for (const auto& tree : gbdt->trees) {
            std::size_t i = 0;
            out.base_value += tree.nodes[0].value;
            while (!tree.nodes[i].is_leaf()) {
                const TreeNode& node = tree.nodes[i];
                const auto f = static_cast<std::size_t>(node.feature);
                const auto child = static_cast<std::size_t>(features[f] <= node.threshold ? node.left : node.right);
                out.contributions[f] += tree.nodes[child].value - node.value;
                i = child;
            }
        }
        return out;
    }
    if (const auto* lr = std::get_if<LogisticModel>(&model.model)) {
        out.base_value = lr->bias;
        for (std::size_t f = 0; f < lr->weights.size(); ++f) {
            out.contributions[f] = lr->weights[f] * (features[f] - lr->means[f]) / lr->scales[f];
        }
        return out;
    }
    throw UnsupportedModel("feature attribution is not available for forest models");
}

}  // namespace aact
