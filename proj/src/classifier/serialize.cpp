#include <cmath>

#include <json.hpp>

#include "aact/classifier.hpp"
#include "aact/errors.hpp"

namespace aact {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "aact-model";

json tree_to_json(const RegressionTree& tree) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array();
    for (const auto& node : tree.nodes) {
        feature.push_back(node.feature);
        threshold.push_back(node.threshold);
        left.push_back(node.left);
        right.push_back(node.right);
        value.push_back(node.value);
    }
    return json{{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

RegressionTree tree_from_json(const json& j, std::size_t width) {
    const auto& feature = j.at("feature");
    const auto n = feature.size();
    for (const char* key : {"threshold", "left", "right", "value"}) {
        if (j.at(key).size() != n) throw CorruptArtifact("tree arrays differ in length");
    }
    if (n == 0) throw CorruptArtifact("empty tree");
    RegressionTree tree;
    tree.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        TreeNode& node = tree.nodes[i];
        node.feature = feature[i].get<std::int32_t>();
        node.threshold = j["threshold"][i].get<double>();
        node.left = j["left"][i].get<std::int32_t>();
        node.right = j["right"][i].get<std::int32_t>();
        node.value = j["value"][i].get<double>();
        if (!std::isfinite(node.value)) throw CorruptArtifact("non-finite node value");
        if (node.is_leaf()) continue;
        // Children always follow their parent, which rules out cycles.
        const auto in_range = [&](std::int32_t c) {
            return c > static_cast<std::int32_t>(i) && static_cast<std::size_t>(c) < n;
        };
        if (static_cast<std::size_t>(node.feature) >= width || !in_range(node.left) || !in_range(node.right)) {
            throw CorruptArtifact("tree node " + std::to_string(i) + " is out of range");
        }
    }
    return tree;
}

json doubles(const std::vector<double>& v) { return json(v); }

std::vector<double> read_doubles(const json& j, std::size_t expected, const char* what) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != expected) throw CorruptArtifact(std::string(what) + " has the wrong length");
    return v;
}

}  // namespace

std::string serialize(const ModelArtifact& model) {
    json j;
    j["format"] = kFormatName;
    j["version"] = kModelFormatVersion;
    j["kind"] = std::string(to_string(model.kind()));
    j["feature_names"] = model.feature_names;
    if (const auto* gbdt = std::get_if<GbdtModel>(&model.model)) {
        const auto& p = gbdt->params;
        j["params"] = {{"n_trees", p.n_trees},           {"max_depth", p.max_depth},
                       {"learning_rate", p.learning_rate}, {"subsample", p.subsample},
                       {"min_samples_leaf", p.min_samples_leaf}, {"seed", p.seed}};
        j["base_margin"] = gbdt->base_margin;
        json trees = json::array();
        for (const auto& t : gbdt->trees) trees.push_back(tree_to_json(t));
        j["trees"] = std::move(trees);
    } else if (const auto* lr = std::get_if<LogisticModel>(&model.model)) {
        const auto& p = lr->params;
        j["params"] = {{"l2", p.l2}, {"iterations", p.iterations}, {"step", p.step}, {"seed", p.seed}};
        j["bias"] = lr->bias;
        j["weights"] = doubles(lr->weights);
        j["means"] = doubles(lr->means);
        j["scales"] = doubles(lr->scales);
    } else {
        const auto& forest = std::get<ForestModel>(model.model);
        const auto& p = forest.params;
        j["params"] = {{"n_trees", p.n_trees},
                       {"max_depth", p.max_depth},
                       {"min_samples_leaf", p.min_samples_leaf},
                       {"max_features", p.max_features},
                       {"seed", p.seed}};
        json trees = json::array();
        for (const auto& t : forest.trees) trees.push_back(tree_to_json(t));
        j["trees"] = std::move(trees);
    }
    return j.dump() + "\n";
}

ModelArtifact deserialize(std::string_view bytes) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::exception& e) {
        throw CorruptArtifact(std::string("model artifact is not valid JSON: ") + e.what());
    }
    try {
        if (!j.is_object() || j.value("format", std::string{}) != kFormatName) {
            throw CorruptArtifact("not a model artifact");
        }
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw VersionMismatch("model format version " + std::to_string(version) + ", expected " +
                                  std::to_string(kModelFormatVersion));
        }
        ModelArtifact out;
        out.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        const std::size_t width = out.feature_names.size();
        const auto kind = j.at("kind").get<std::string>();
        const auto& p = j.at("params");
        if (kind == "gbdt") {
            GbdtModel m;
            m.params.n_trees = p.at("n_trees").get<int>();
            m.params.max_depth = p.at("max_depth").get<int>();
            m.params.learning_rate = p.at("learning_rate").get<double>();
            m.params.subsample = p.at("subsample").get<double>();
            m.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
            m.params.seed = p.at("seed").get<std::uint64_t>();
            m.base_margin = j.at("base_margin").get<double>();
            for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t, width));
            out.model = std::move(m);
        } else if (kind == "logistic") {
            LogisticModel m;
            m.params.l2 = p.at("l2").get<double>();
            m.params.iterations = p.at("iterations").get<int>();
            m.params.step = p.at("step").get<double>();
            m.params.seed = p.at("seed").get<std::uint64_t>();
            m.bias = j.at("bias").get<double>();
            m.weights = read_doubles(j.at("weights"), width, "weights");
            m.means = read_doubles(j.at("means"), width, "means");
            m.scales = read_doubles(j.at("scales"), width, "scales");
            for (double s : m.scales) {
                if (!(s > 0)) throw CorruptArtifact("non-positive feature scale");
            }
            out.model = std::move(m);
        } else if (kind == "forest") {
            ForestModel m;
            m.params.n_trees = p.at("n_trees").get<int>();
            m.params.max_depth = p.at("max_depth").get<int>();
            m.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
            m.params.max_features = p.at("max_features").get<int>();
            m.params.seed = p.at("seed").get<std::uint64_t>();
            for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t, width));
            out.model = std::move(m);
        } else {
            throw CorruptArtifact("unknown model kind '" + kind + "'");
        }
        return out;
    } catch (const json::exception& e) {
        throw CorruptArtifact(std::string("malformed model artifact: ") + e.what());
    }
}

}  // namespace aact
