#include "aact/logistic.hpp"

#include <cmath>
#include <stdexcept>

#include "aact/errors.hpp"
#include "tree_builder.hpp"

namespace aact {

namespace {

// log(1 + exp(m)) without overflow.
double softplus(double m) {
    return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

}  // namespace

LogisticObjective::LogisticObjective(const TrainingSet& data, double l2)
    : rows_(data.rows()), width_(data.width()), l2_(l2), labels_(data.labels()) {
    if (rows_ == 0) throw EmptyData("logistic objective over no rows");
    means_.assign(width_, 0.0);
    scales_.assign(width_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t f = 0; f < width_; ++f) means_[f] += data.value(i, f);
    }
    for (auto& m : means_) m /= static_cast<double>(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t f = 0; f < width_; ++f) {
            const double d = data.value(i, f) - means_[f];
            scales_[f] += d * d;
        }
    }
    for (auto& s : scales_) {
        s = std::sqrt(s / static_cast<double>(rows_));
        // Constant columns stay at zero after centring; any scale works.
        if (!(s > 1e-12)) s = 1.0;
    }
    standardized_.resize(rows_ * width_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t f = 0; f < width_; ++f) {
            standardized_[i * width_ + f] = (data.value(i, f) - means_[f]) / scales_[f];
        }
    }
}

double LogisticObjective::loss(std::span<const double> params) const {
    if (params.size() != dimension()) throw DimensionMismatch("logistic parameter vector");
    double total = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        double m = params[0];
        const double* x = standardized_.data() + i * width_;
        for (std::size_t f = 0; f < width_; ++f) m += params[f + 1] * x[f];
        // -log p(y | m) = softplus(m) - y m
        total += softplus(m) - labels_[i] * m;
    }
    double penalty = 0.0;
    for (std::size_t f = 0; f < width_; ++f) penalty += params[f + 1] * params[f + 1];
    return total / static_cast<double>(rows_) + 0.5 * l2_ * penalty;
}

std::vector<double> LogisticObjective::gradient(std::span<const double> params) const {
    if (params.size() != dimension()) throw DimensionMismatch("logistic parameter vector");
    std::vector<double> grad(dimension(), 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double m = params[0];
        const double* x = standardized_.data() + i * width_;
        for (std::size_t f = 0; f < width_; ++f) m += params[f + 1] * x[f];
        const double r = sigmoid(m) - labels_[i];
        grad[0] += r;
        for (std::size_t f = 0; f < width_; ++f) grad[f + 1] += r * x[f];
    }
    const double inv_n = 1.0 / static_cast<double>(rows_);
    grad[0] *= inv_n;
    for (std::size_t f = 0; f < width_; ++f) grad[f + 1] = grad[f + 1] * inv_n + l2_ * params[f + 1];
    return grad;
}

ModelArtifact train_logistic(const TrainingSet& data, const LogisticParams& params) {
    detail::check_training_data(data);
    if (params.l2 < 0 || params.iterations < 0 || params.step < 0) {
        throw std::invalid_argument("invalid logistic regression parameters");
    }
    const LogisticObjective objective(data, params.l2);
    // Standardized columns bound the Hessian's largest eigenvalue by
    // (width + 1) / 4 + l2, so this step never overshoots.
    const double step = params.step > 0
                            ? params.step
                            : 1.0 / (0.25 * static_cast<double>(data.width() + 1) + params.l2);
    std::vector<double> theta(objective.dimension(), 0.0);
    const double prior = static_cast<double>(data.positives()) / static_cast<double>(data.rows());
    theta[0] = std::log(prior / (1.0 - prior));
    for (int it = 0; it < params.iterations; ++it) {
        const auto grad = objective.gradient(theta);
        for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= step * grad[k];
    }

    LogisticModel model;
    model.params = params;
    model.bias = theta[0];
    model.weights.assign(theta.begin() + 1, theta.end());
    model.means = objective.means();
    model.scales = objective.scales();
    return ModelArtifact{data.feature_names(), std::move(model)};
}

}  // namespace aact
