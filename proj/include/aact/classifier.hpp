#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aact/alert.hpp"

namespace aact {

/// Labelled rows in row-major storage.
class TrainingSet {
public:
    TrainingSet() = default;
    explicit TrainingSet(std::vector<std::string> feature_names);

    void add(std::span<const double> features, int label, Timestamp timestamp = 0.0,
             std::string alert_id = {});

    std::size_t rows() const noexcept { return labels_.size(); }
    std::size_t width() const noexcept { return feature_names_.size(); }
    bool empty() const noexcept { return labels_.empty(); }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * width(), width()};
    }
    double value(std::size_t i, std::size_t feature) const { return values_[i * width() + feature]; }
    int label(std::size_t i) const { return labels_[i]; }
    Timestamp timestamp(std::size_t i) const { return timestamps_[i]; }
    const std::string& alert_id(std::size_t i) const { return alert_ids_[i]; }

    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    const std::vector<Timestamp>& timestamps() const noexcept { return timestamps_; }

    /// Rows at the given indices, in that order.
    TrainingSet subset(std::span<const std::size_t> indices) const;
    /// Stable sort by timestamp.
    void sort_by_time();

    std::size_t positives() const;

private:
    std::vector<std::string> feature_names_;
    std::vector<double> values_;
    std::vector<int> labels_;
    std::vector<Timestamp> timestamps_;
    std::vector<std::string> alert_ids_;
};

/// Binary split node; a node with feature < 0 is a leaf. `value` is the
/// node's own prediction, kept on internal nodes as well for path attribution.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Rows with x[feature] <= threshold go left.
struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const;
    std::size_t leaf_index(std::span<const double> x) const;
    std::size_t depth() const;
    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct GbdtParams {
    int n_trees = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    double subsample = 1.0;
    int min_samples_leaf = 20;
    std::uint64_t seed = 0;
    friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

struct LogisticParams {
    double l2 = 1e-4;
    int iterations = 1000;
    /// Step size; 0 picks a step that guarantees monotone descent.
    double step = 0.0;
    std::uint64_t seed = 0;
    friend bool operator==(const LogisticParams&, const LogisticParams&) = default;
};

struct ForestParams {
    int n_trees = 50;
    int max_depth = 10;
    int min_samples_leaf = 5;
    /// Features tried per split; 0 means round(sqrt(width)).
    int max_features = 0;
    std::uint64_t seed = 0;
    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct GbdtModel {
    GbdtParams params;
    double base_margin = 0.0;
    std::vector<RegressionTree> trees;
    friend bool operator==(const GbdtModel&, const GbdtModel&) = default;
};

/// Weights apply to standardized features: margin = bias + sum w_j (x_j - mean_j) / scale_j.
struct LogisticModel {
    LogisticParams params;
    double bias = 0.0;
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> scales;
    friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

struct ForestModel {
    ForestParams params;
    std::vector<RegressionTree> trees;
    friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

enum class ModelKind : std::uint8_t { Gbdt, Logistic, Forest };
std::string_view to_string(ModelKind kind);

/// Immutable trained classifier plus the feature order it expects.
struct ModelArtifact {
    std::vector<std::string> feature_names;
    std::variant<GbdtModel, LogisticModel, ForestModel> model;

    ModelKind kind() const noexcept { return static_cast<ModelKind>(model.index()); }
    std::size_t width() const noexcept { return feature_names.size(); }
    friend bool operator==(const ModelArtifact&, const ModelArtifact&) = default;
};

/// Throws EmptyData, DegenerateLabels, or DimensionMismatch.
ModelArtifact train_gbdt(const TrainingSet& data, const GbdtParams& params = {});
ModelArtifact train_logistic(const TrainingSet& data, const LogisticParams& params = {});
ModelArtifact train_forest(const TrainingSet& data, const ForestParams& params = {});

double sigmoid(double margin);

/// Raw additive score before the sigmoid. Throws DimensionMismatch.
double margin(const ModelArtifact& model, std::span<const double> features);
/// Probability of the positive class, strictly inside (0, 1).
double predict(const ModelArtifact& model, std::span<const double> features);
std::vector<double> predict_all(const ModelArtifact& model, const TrainingSet& data);

struct Attribution {
    double base_value = 0.0;
    std::vector<double> contributions;
};

/// Additive per-feature impact on the margin: base_value + sum(contributions)
/// equals margin(). Trees credit each split's change in node value to the
/// split feature; logistic credits weight times centred value. Throws
/// UnsupportedModel for forests.
Attribution attribute(const ModelArtifact& model, std::span<const double> features);

/// Mean logistic loss of the model after each boosting stage (entry 0 is the
/// prior alone). Used to check that boosting never increases training loss.
std::vector<double> staged_log_loss(const ModelArtifact& model, const TrainingSet& data);

double log_loss(std::span<const double> probabilities, std::span<const int> labels);

/// Canonical text encoding. Byte equality implies model equality.
std::string serialize(const ModelArtifact& model);
/// Throws VersionMismatch or CorruptArtifact.
ModelArtifact deserialize(std::string_view bytes);

inline constexpr int kModelFormatVersion = 1;

}  // namespace aact
