#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "aact/classifier.hpp"
#include "aact/feature_dump.hpp"
#include "aact/features.hpp"

namespace aact {

/// Expanding-window time-series split. Row positions refer to the rows in
/// timestamp order, `order[p]` giving the caller's index of position p.
struct FoldPlan {
    struct Fold {
        std::size_t train_begin = 0;
        std::size_t train_end = 0;
        std::size_t test_begin = 0;
        std::size_t test_end = 0;
    };

    std::size_t k = 0;
    std::vector<std::size_t> order;
    std::vector<Fold> folds;
    /// Timestamp of the first test row of each fold.
    std::vector<Timestamp> boundaries;

    std::vector<std::size_t> train_indices(std::size_t fold) const;
    std::vector<std::size_t> test_indices(std::size_t fold) const;
};

/// Splits n rows into k + 1 contiguous blocks: an initial training block and
/// k equal-count test blocks (n / (k + 1) rows each; the initial block takes
/// the remainder). Fold i trains on everything before its test block. A
/// boundary falling inside a run of equal timestamps moves forward past the
/// run so training rows are always strictly older than test rows.
///
/// Throws TooFewRows if any block has fewer than 2 rows or only one class,
/// std::invalid_argument if k < 2, LengthMismatch on unequal inputs.
FoldPlan plan_time_series_folds(std::span<const Timestamp> timestamps, std::span<const int> labels,
                                std::size_t k);
FoldPlan plan_time_series_folds(const TrainingSet& data, std::size_t k);

struct MetricsReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double roc_auc = 0.0;
    /// Fraction of alerts scored below the threshold, i.e. closed.
    double alert_reduction = 0.0;
    /// Fraction of positives scored below the threshold.
    double fnr = 0.0;
    double threshold = 0.5;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Scores at or above the threshold are predicted positive. Ratios with a
/// zero denominator are 0; AUC is 0.5 when either class is absent. AUC is the
/// rank statistic with ties credited one half.
///
/// Throws LengthMismatch or EmptyInput.
MetricsReport compute_metrics(std::span<const double> scores, std::span<const int> labels,
                              double threshold = 0.5);

double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct CurvePoint {
    double threshold = 0.0;
    double reduction = 0.0;
    double fnr = 0.0;
    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Alert reduction against false negative rate at each threshold; equal to
/// compute_metrics at the same threshold. Thresholds must be ascending.
std::vector<CurvePoint> reduction_fnr_curve(std::span<const double> scores, std::span<const int> labels,
                                            std::span<const double> thresholds);

/// `steps` + 1 evenly spaced thresholds from 0 to 1 plus one just above 1.
std::vector<double> default_curve_thresholds(std::size_t steps = 100);

/// The threshold, among the distinct scores and +infinity, whose alert
/// reduction is closest to `target`; ties take the lower threshold.
double threshold_for_reduction(std::span<const double> scores, double target);

/// Scores the single baseline rate read at each alert's creation time. The
/// store must hold every event before the last alert's creation.
std::vector<double> baseline_scores(const ActionCountStore& store, std::span<const Alert> alerts,
                                    const FeatureConfig& config);
/// The same scores read back from the corresponding slot of a feature dump.
std::vector<double> baseline_scores(const FeatureTable& dump, const FeatureConfig& config);

struct CorrelationReport {
    std::vector<std::string> names;
    /// Row-major names.size() x names.size() Pearson matrix.
    std::vector<double> matrix;
    /// Columns with zero variance; their correlations are reported as 0.
    std::vector<std::string> constant_columns;

    double at(std::size_t i, std::size_t j) const { return matrix[i * names.size() + j]; }
};

/// Pearson correlations between the selected dump columns and the label
/// (appended as the last column, named "label"). An empty selection uses
/// every feature column. Throws EmptyInput, or std::invalid_argument for an
/// unknown column name.
CorrelationReport window_correlation_report(const FeatureTable& dump,
                                            std::span<const std::string> columns = {});
CorrelationReport pearson_matrix(std::vector<std::string> names,
                                 const std::vector<std::vector<double>>& columns);

void write_correlation_table(std::ostream& out, const CorrelationReport& report);

/// Mean drop in ROC AUC when a column is shuffled, per feature.
std::vector<double> permutation_importance(const ModelArtifact& model, const TrainingSet& data,
                                           std::uint64_t seed, int repeats = 3);

}  // namespace aact
