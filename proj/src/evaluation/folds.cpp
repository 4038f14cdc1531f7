#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "aact/errors.hpp"
#include "aact/evaluation.hpp"

namespace aact {

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
    const Fold& f = folds.at(fold);
    return {order.begin() + static_cast<std::ptrdiff_t>(f.train_begin),
            order.begin() + static_cast<std::ptrdiff_t>(f.train_end)};
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
    const Fold& f = folds.at(fold);
    return {order.begin() + static_cast<std::ptrdiff_t>(f.test_begin),
            order.begin() + static_cast<std::ptrdiff_t>(f.test_end)};
}

FoldPlan plan_time_series_folds(std::span<const Timestamp> timestamps, std::span<const int> labels,
                                std::size_t k) {
    if (k < 2) throw std::invalid_argument("time-series split needs at least 2 folds");
    if (timestamps.size() != labels.size()) throw LengthMismatch("timestamps and labels differ in length");
    const std::size_t n = timestamps.size();
    const std::size_t test_size = n / (k + 1);
    if (test_size < 2) {
        throw TooFewRows(std::to_string(n) + " rows cannot fill " + std::to_string(k + 1) + " blocks");
    }

    FoldPlan plan;
    plan.k = k;
    plan.order.resize(n);
    std::iota(plan.order.begin(), plan.order.end(), std::size_t{0});
    std::stable_sort(plan.order.begin(), plan.order.end(),
                     [&](std::size_t a, std::size_t b) { return timestamps[a] < timestamps[b]; });
    auto ts = [&](std::size_t pos) { return timestamps[plan.order[pos]]; };

    // Block edges; edge[0] = 0 and edge[k + 1] = n.
    std::vector<std::size_t> edge(k + 2);
    edge[k + 1] = n;
    for (std::size_t i = 1; i <= k; ++i) {
        std::size_t b = n - (k + 1 - i) * test_size;
        while (b < n && b > 0 && ts(b) == ts(b - 1)) ++b;
        edge[i] = std::max(b, edge[i - 1]);
    }

    for (std::size_t i = 0; i <= k; ++i) {
        const std::size_t lo = edge[i], hi = edge[i + 1];
        if (hi - lo < 2) throw TooFewRows("block " + std::to_string(i) + " holds fewer than 2 rows");
        bool pos = false, neg = false;
        for (std::size_t p = lo; p < hi; ++p) (labels[plan.order[p]] ? pos : neg) = true;
        if (!pos || !neg) throw TooFewRows("block " + std::to_string(i) + " holds a single class");
    }

    for (std::size_t i = 1; i <= k; ++i) {
        plan.folds.push_back({0, edge[i], edge[i], edge[i + 1]});
        plan.boundaries.push_back(ts(edge[i]));
    }
    return plan;
}

FoldPlan plan_time_series_folds(const TrainingSet& data, std::size_t k) {
    return plan_time_series_folds(data.timestamps(), data.labels(), k);
}

}  // namespace aact
