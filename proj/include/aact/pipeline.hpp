#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aact/classifier.hpp"
#include "aact/evaluation.hpp"
#include "aact/feature_dump.hpp"
#include "aact/features.hpp"

namespace aact {

// ---------------------------------------------------------------------------
// AIT alert data set

struct AitIngestOptions {
    std::uint64_t jitter_seed = 0;
    /// Labelling delay drawn uniformly from [jitter_min, jitter_max] seconds.
    Duration jitter_min = kMinute;
    Duration jitter_max = 16 * kMinute;
    /// Fraction of records kept per tenant; 1 keeps everything.
    double subsample = 1.0;
    std::uint64_t subsample_seed = 0;
};

/// Alerts in chronological order, each carrying its synthetic resolution.
struct AitDataset {
    std::vector<Alert> alerts;
    std::vector<int> labels;
    std::size_t malformed = 0;
    std::size_t files = 0;

    std::size_t category_count() const;
    std::size_t tenant_count() const;
};

/// Reads every *.json / *.jsonl file under `root` (or `root` itself when it
/// is a file) in path order. Each line is one record; a file holding a single
/// JSON array is accepted too. The tenant is the file name up to the first
/// '_' or '.', unless the record names a scenario. Records that fail to parse
/// or repeat an id are skipped and counted. The merged stream is stable-sorted
/// by creation time before subsampling and jitter, so the output depends only
/// on the data and the seeds.
AitDataset ingest_ait(const std::filesystem::path& root, const AitIngestOptions& options = {});
AitDataset ingest_ait(const std::vector<std::filesystem::path>& files, const AitIngestOptions& options = {});

/// Attack windows and labels of a synthetic corpus in the AIT record layout.
struct SyntheticAitOptions {
    std::uint64_t seed = 1;
    int testbeds = 4;
    int categories = 24;
    int hosts_per_testbed = 12;
    Duration span = 21 * kDay;
    /// Mean alerts per testbed per day.
    double alerts_per_day = 400.0;
    /// Attack windows per testbed and their length.
    int attacks_per_testbed = 3;
    Duration attack_length = 6 * kHour;
    /// Probability that an out-of-window record carries an attack event
    /// label (which the label rule must treat as benign).
    double mislabel_rate = 0.01;
};

/// Writes one `<testbed>_alerts.jsonl` per testbed into `dir`. Returns the
/// files written.
std::vector<std::filesystem::path> write_synthetic_ait(const std::filesystem::path& dir,
                                                       const SyntheticAitOptions& options);

// ---------------------------------------------------------------------------
// Full-workflow synthetic alerts

struct SyntheticSocOptions {
    std::uint64_t seed = 1;
    int tenants = 3;
    int categories = 30;
    int entities_per_tenant = 40;
    Duration span = 60 * kDay;
    double alerts_per_day = 300.0;
    /// Triage delay drawn uniformly from [min, max].
    Duration triage_min = kMinute;
    Duration triage_max = 16 * kMinute;
};

/// Alerts in creation order with resolutions attached. Each category and
/// entity carries a latent investigation propensity, so the dynamic features
/// are informative; investigated alerts are mostly labelled malicious.
std::vector<Alert> synthesize_soc_alerts(const SyntheticSocOptions& options);

// ---------------------------------------------------------------------------
// Replay featurization

enum class LabelTarget : std::uint8_t { Investigated, Malicious };

LabelTarget default_target(Workflow workflow);
int label_of(const ResolutionEvent& resolution, LabelTarget target);

struct ReplayOptions {
    /// Alerts created before start + warmup feed the store but are not emitted.
    Duration warmup = 0.0;
    StoreConfig store;
    std::optional<LabelTarget> target;
};

/// Replays alerts and their resolutions in event-time order and assembles
/// each resolved alert's vector at its creation time, before the alert itself
/// is recorded. Unresolved alerts only count as sightings. Throws
/// std::invalid_argument unless alerts are sorted by creation time.
FeatureTable featurize(const std::vector<Alert>& alerts, const FeatureConfig& config,
                       const ReplayOptions& options = {});

/// Loads every alert and resolution into a store (no retention).
ActionCountStore build_store(const std::vector<Alert>& alerts, StoreConfig config = {});

TrainingSet to_training_set(const FeatureTable& table);

// ---------------------------------------------------------------------------
// Cross-validated experiment

struct PipelineConfig {
    FeatureConfig features = FeatureConfig::ait();
    ReplayOptions replay;
    std::size_t folds = 2;
    GbdtParams gbdt;
    double threshold = 0.5;
};

struct FoldResult {
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    MetricsReport model;
    /// Baseline at the threshold matching the model's alert reduction.
    MetricsReport baseline;
};

struct PipelineResult {
    FeatureTable dump;
    std::vector<ModelArtifact> models;
    std::vector<FoldResult> folds;
    MetricsReport model_mean;
    MetricsReport baseline_mean;
};

PipelineResult run_pipeline(const std::vector<Alert>& alerts, const PipelineConfig& config);
/// Runs on an already featurized dump.
PipelineResult evaluate_dump(FeatureTable dump, const PipelineConfig& config);

/// Averages ratios and sums the confusion counts.
MetricsReport mean_metrics(const std::vector<MetricsReport>& reports);

/// Tab-separated table with one row per fold and system plus the means.
void write_metrics_table(std::ostream& out, const PipelineResult& result);
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const std::string& system, const std::string& fold,
                       const MetricsReport& m);
void write_curve_table(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace aact
