#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "aact/classifier.hpp"
#include "aact/errors.hpp"

namespace aact {

TrainingSet::TrainingSet(std::vector<std::string> feature_names)
    : feature_names_(std::move(feature_names)) {}

void TrainingSet::add(std::span<const double> features, int label, Timestamp timestamp,
                      std::string alert_id) {
    if (features.size() != width()) {
        throw DimensionMismatch("row has " + std::to_string(features.size()) + " features, expected " +
                                std::to_string(width()));
    }
    if (label != 0 && label != 1) throw std::invalid_argument("labels must be 0 or 1");
    values_.insert(values_.end(), features.begin(), features.end());
    labels_.push_back(label);
    timestamps_.push_back(timestamp);
    alert_ids_.push_back(std::move(alert_id));
}

TrainingSet TrainingSet::subset(std::span<const std::size_t> indices) const {
    TrainingSet out(feature_names_);
    out.values_.reserve(indices.size() * width());
    out.labels_.reserve(indices.size());
    out.timestamps_.reserve(indices.size());
    out.alert_ids_.reserve(indices.size());
    for (std::size_t i : indices) {
        const auto r = row(i);
        out.values_.insert(out.values_.end(), r.begin(), r.end());
        out.labels_.push_back(labels_[i]);
        out.timestamps_.push_back(timestamps_[i]);
        out.alert_ids_.push_back(alert_ids_[i]);
    }
    return out;
}

void TrainingSet::sort_by_time() {
    std::vector<std::size_t> order(rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [this](std::size_t a, std::size_t b) { return timestamps_[a] < timestamps_[b]; });
    *this = subset(order);
}

std::size_t TrainingSet::positives() const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Gbdt:
            return "gbdt";
        case ModelKind::Logistic:
            return "logistic";
        case ModelKind::Forest:
            return "forest";
    }
    return "unknown";
}

double sigmoid(double margin) {
    const double p = margin >= 0 ? 1.0 / (1.0 + std::exp(-margin))
                                 : std::exp(margin) / (1.0 + std::exp(margin));
    // Keep probabilities strictly inside (0, 1).
    return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

namespace {

void check_width(const ModelArtifact& model, std::span<const double> features) {
    if (features.size() != model.width()) {
        throw DimensionMismatch("feature vector has " + std::to_string(features.size()) +
                                " slots, model expects " + std::to_string(model.width()));
    }
}

double forest_probability(const ForestModel& forest, std::span<const double> x) {
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += tree.predict(x);
    const double p = forest.trees.empty() ? 0.5 : sum / static_cast<double>(forest.trees.size());
    return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

}  // namespace

double margin(const ModelArtifact& model, std::span<const double> features) {
    check_width(model, features);
    if (const auto* gbdt = std::get_if<GbdtModel>(&model.model)) {
        double m = gbdt->base_margin;
        for (const auto& tree : gbdt->trees) m += tree.predict(features);
        return m;
    }
    if (const auto* lr = std::get_if<LogisticModel>(&model.model)) {
        double m = lr->bias;
        for (std::size_t f = 0; f < lr->weights.size(); ++f) {
            m += lr->weights[f] * (features[f] - lr->means[f]) / lr->scales[f];
        }
        return m;
    }
    const double p = forest_probability(std::get<ForestModel>(model.model), features);
    return std::log(p / (1.0 - p));
}

double predict(const ModelArtifact& model, std::span<const double> features) {
    if (const auto* forest = std::get_if<ForestModel>(&model.model)) {
        check_width(model, features);
        return forest_probability(*forest, features);
    }
    return sigmoid(margin(model, features));
}

std::vector<double> predict_all(const ModelArtifact& model, const TrainingSet& data) {
    std::vector<double> out(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) out[i] = predict(model, data.row(i));
    return out;
}

double log_loss(std::span<const double> probabilities, std::span<const int> labels) {
    if (probabilities.size() != labels.size()) throw LengthMismatch("log_loss inputs differ in length");
    if (probabilities.empty()) throw EmptyInput("log_loss over no rows");
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = probabilities[i];
        total -= labels[i] ? std::log(p) : std::log1p(-p);
    }
    return total / static_cast<double>(labels.size());
}

std::vector<double> staged_log_loss(const ModelArtifact& model, const TrainingSet& data) {
    const auto* gbdt = std::get_if<GbdtModel>(&model.model);
    if (!gbdt) throw UnsupportedModel("staged loss is defined for boosted models only");
    if (data.width() != model.width()) throw DimensionMismatch("training set width");
    std::vector<double> margins(data.rows(), gbdt->base_margin);
    std::vector<double> probs(data.rows());
    std::vector<double> out;
    out.reserve(gbdt->trees.size() + 1);
    auto record = [&] {
        for (std::size_t i = 0; i < margins.size(); ++i) probs[i] = sigmoid(margins[i]);
        out.push_back(log_loss(probs, data.labels()));
    };
    record();
    for (const auto& tree : gbdt->trees) {
        for (std::size_t i = 0; i < margins.size(); ++i) margins[i] += tree.predict(data.row(i));
        record();
    }
    return out;
}

}  // namespace aact
