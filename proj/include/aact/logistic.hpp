#pragma once

#include <span>
#include <vector>

#include "aact/classifier.hpp"

namespace aact {

/// Regularized logistic loss over standardized features. Parameters are laid
/// out as [bias, w_0, ..., w_{d-1}]; the bias is not penalized.
class LogisticObjective {
public:
    LogisticObjective(const TrainingSet& data, double l2);

    std::size_t dimension() const noexcept { return width_ + 1; }
    const std::vector<double>& means() const noexcept { return means_; }
    const std::vector<double>& scales() const noexcept { return scales_; }

    double loss(std::span<const double> params) const;
    std::vector<double> gradient(std::span<const double> params) const;

private:
    std::size_t rows_ = 0;
    std::size_t width_ = 0;
    double l2_ = 0.0;
    std::vector<double> standardized_;  // row-major
    std::vector<int> labels_;
    std::vector<double> means_;
    std::vector<double> scales_;
};

}  // namespace aact
