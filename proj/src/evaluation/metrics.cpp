#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "aact/errors.hpp"
#include "aact/evaluation.hpp"
#include "aact/random.hpp"

namespace aact {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw LengthMismatch("scores and labels differ in length");
    if (scores.empty()) throw EmptyInput("no scores to evaluate");
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
    }
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Walk groups of tied scores from the bottom: each positive beats every
    // negative below its group and ties with the negatives inside it.
    double wins = 0.0;
    std::int64_t neg_below = 0, positives = 0;
    for (std::size_t g = 0; g < order.size();) {
        std::size_t end = g;
        std::int64_t pos = 0, neg = 0;
        while (end < order.size() && scores[order[end]] == scores[order[g]]) {
            (labels[order[end]] ? pos : neg) += 1;
            ++end;
        }
        wins += static_cast<double>(pos) * static_cast<double>(neg_below) +
                0.5 * static_cast<double>(pos) * static_cast<double>(neg);
        neg_below += neg;
        positives += pos;
        g = end;
    }
    if (positives == 0 || neg_below == 0) return 0.5;
    return wins / (static_cast<double>(positives) * static_cast<double>(neg_below));
}

MetricsReport compute_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_inputs(scores, labels);
    MetricsReport r;
    r.threshold = threshold;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i]) {
            (predicted ? r.tp : r.fn) += 1;
        } else {
            (predicted ? r.fp : r.tn) += 1;
        }
    }
    const std::int64_t n = r.total();
    r.accuracy = safe_ratio(r.tp + r.tn, n);
    r.precision = safe_ratio(r.tp, r.tp + r.fp);
    r.recall = safe_ratio(r.tp, r.tp + r.fn);
    r.f1 = safe_ratio(2 * r.tp, 2 * r.tp + r.fp + r.fn);
    r.alert_reduction = safe_ratio(r.tn + r.fn, n);
    r.fnr = safe_ratio(r.fn, r.fn + r.tp);
    r.roc_auc = roc_auc(scores, labels);
    return r;
}

std::vector<CurvePoint> reduction_fnr_curve(std::span<const double> scores, std::span<const int> labels,
                                            std::span<const double> thresholds) {
    check_inputs(scores, labels);
    if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
        throw std::invalid_argument("curve thresholds must be ascending");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // positives_below[p]: positives among the p lowest scores.
    std::vector<std::int64_t> positives_below(order.size() + 1, 0);
    for (std::size_t p = 0; p < order.size(); ++p) positives_below[p + 1] = positives_below[p] + labels[order[p]];
    const std::int64_t positives = positives_below.back();
    const auto n = static_cast<std::int64_t>(order.size());

    std::vector<CurvePoint> out;
    out.reserve(thresholds.size());
    for (double th : thresholds) {
        const auto closed = static_cast<std::size_t>(
            std::partition_point(order.begin(), order.end(), [&](std::size_t i) { return scores[i] < th; }) -
            order.begin());
        out.push_back({th, safe_ratio(static_cast<std::int64_t>(closed), n),
                       safe_ratio(positives_below[closed], positives)});
    }
    return out;
}

std::vector<double> default_curve_thresholds(std::size_t steps) {
    if (steps == 0) throw std::invalid_argument("curve needs at least one step");
    std::vector<double> out;
    for (std::size_t i = 0; i <= steps; ++i) out.push_back(static_cast<double>(i) / static_cast<double>(steps));
    out.push_back(std::nextafter(1.0, 2.0));
    return out;
}

double threshold_for_reduction(std::span<const double> scores, double target) {
    if (scores.empty()) throw EmptyInput("no scores to choose a threshold from");
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double best = std::numeric_limits<double>::infinity();
    double best_gap = std::abs(1.0 - target);
    // Threshold sorted[p] closes the p alerts below it; visit ascending so a
    // tie keeps the lower threshold.
    for (std::size_t p = 0; p < sorted.size(); ++p) {
        if (p > 0 && sorted[p] == sorted[p - 1]) continue;
        const double gap = std::abs(static_cast<double>(p) / n - target);
        if (gap <= best_gap) {
            if (gap < best_gap || sorted[p] < best) best = sorted[p];
            best_gap = gap;
            if (gap == 0.0) break;
        }
    }
    return best;
}

std::vector<double> permutation_importance(const ModelArtifact& model, const TrainingSet& data,
                                           std::uint64_t seed, int repeats) {
    if (repeats < 1) throw std::invalid_argument("permutation importance needs at least one repeat");
    if (data.width() != model.width()) throw DimensionMismatch("data width differs from the model");
    const double base = roc_auc(predict_all(model, data), data.labels());
    std::mt19937_64 rng(seed);
    std::vector<double> out(data.width(), 0.0);
    std::vector<std::size_t> perm(data.rows());
    std::vector<double> row(data.width()), scores(data.rows());
    for (std::size_t f = 0; f < data.width(); ++f) {
        for (int rep = 0; rep < repeats; ++rep) {
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            shuffle(std::span<std::size_t>(perm), rng);
            for (std::size_t i = 0; i < data.rows(); ++i) {
                const auto r = data.row(i);
                std::copy(r.begin(), r.end(), row.begin());
                row[f] = data.value(perm[i], f);
                scores[i] = predict(model, row);
            }
            out[f] += base - roc_auc(scores, data.labels());
        }
        out[f] /= repeats;
    }
    return out;
}

}  // namespace aact
