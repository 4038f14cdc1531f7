#include <ostream>

#include "aact/errors.hpp"
#include "aact/pipeline.hpp"

namespace aact {

MetricsReport mean_metrics(const std::vector<MetricsReport>& reports) {
    MetricsReport m;
    if (reports.empty()) return m;
    m.threshold = 0.0;
    for (const auto& r : reports) {
        m.accuracy += r.accuracy;
        m.precision += r.precision;
        m.recall += r.recall;
        m.f1 += r.f1;
        m.roc_auc += r.roc_auc;
        m.alert_reduction += r.alert_reduction;
        m.fnr += r.fnr;
        m.threshold += r.threshold;
        m.tp += r.tp;
        m.fp += r.fp;
        m.tn += r.tn;
        m.fn += r.fn;
    }
    const auto k = static_cast<double>(reports.size());
    for (double* v : {&m.accuracy, &m.precision, &m.recall, &m.f1, &m.roc_auc, &m.alert_reduction, &m.fnr,
                      &m.threshold}) {
        *v /= k;
    }
    return m;
}

PipelineResult evaluate_dump(FeatureTable dump, const PipelineConfig& config) {
    if (dump.feature_names != feature_names(config.features)) {
        throw DimensionMismatch("feature dump layout differs from the configured workflow");
    }
    PipelineResult result;
    const TrainingSet data = to_training_set(dump);
    const std::vector<double> baseline = baseline_scores(dump, config.features);
    const FoldPlan plan = plan_time_series_folds(data, config.folds);

    std::vector<MetricsReport> model_reports, baseline_reports;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        const auto train_idx = plan.train_indices(f);
        const auto test_idx = plan.test_indices(f);
        const TrainingSet train = data.subset(train_idx);
        const TrainingSet test = data.subset(test_idx);
        ModelArtifact model = train_gbdt(train, config.gbdt);

        FoldResult fold;
        fold.train_rows = train.rows();
        fold.test_rows = test.rows();
        fold.model = compute_metrics(predict_all(model, test), test.labels(), config.threshold);

        std::vector<double> base_test;
        base_test.reserve(test_idx.size());
        for (std::size_t i : test_idx) base_test.push_back(baseline[i]);
        const double base_threshold = threshold_for_reduction(base_test, fold.model.alert_reduction);
        fold.baseline = compute_metrics(base_test, test.labels(), base_threshold);

        model_reports.push_back(fold.model);
        baseline_reports.push_back(fold.baseline);
        result.folds.push_back(fold);
        result.models.push_back(std::move(model));
    }
    result.model_mean = mean_metrics(model_reports);
    result.baseline_mean = mean_metrics(baseline_reports);
    result.dump = std::move(dump);
    return result;
}

PipelineResult run_pipeline(const std::vector<Alert>& alerts, const PipelineConfig& config) {
    return evaluate_dump(featurize(alerts, config.features, config.replay), config);
}

void write_metrics_header(std::ostream& out) {
    out << "# ratios with a zero denominator are reported as 0; AUC is 0.5 when a class is absent\n";
    out << "system\tfold\tthreshold\taccuracy\tprecision\trecall\tf1\troc_auc\talert_reduction\tfnr\ttp\tfp\ttn\tfn\n";
}

void write_metrics_row(std::ostream& out, const std::string& system, const std::string& fold,
                       const MetricsReport& m) {
    out << system << '\t' << fold << '\t' << format_number(m.threshold) << '\t' << format_number(m.accuracy)
        << '\t' << format_number(m.precision) << '\t' << format_number(m.recall) << '\t' << format_number(m.f1)
        << '\t' << format_number(m.roc_auc) << '\t' << format_number(m.alert_reduction) << '\t'
        << format_number(m.fnr) << '\t' << m.tp << '\t' << m.fp << '\t' << m.tn << '\t' << m.fn << '\n';
}

void write_metrics_table(std::ostream& out, const PipelineResult& result) {
    write_metrics_header(out);
    for (std::size_t f = 0; f < result.folds.size(); ++f) {
        write_metrics_row(out, "model", std::to_string(f), result.folds[f].model);
        write_metrics_row(out, "baseline", std::to_string(f), result.folds[f].baseline);
    }
    write_metrics_row(out, "model", "mean", result.model_mean);
    write_metrics_row(out, "baseline", "mean", result.baseline_mean);
}

void write_curve_table(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "threshold\talert_reduction\tfnr\n";
    for (const auto& p : curve) {
        out << format_number(p.threshold) << '\t' << format_number(p.reduction) << '\t' << format_number(p.fnr)
            << '\n';
    }
}

}  // namespace aact
