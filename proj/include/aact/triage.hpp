#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "aact/classifier.hpp"
#include "aact/feature_store.hpp"
#include "aact/features.hpp"
#include "aact/pipeline.hpp"

namespace aact {

// ---------------------------------------------------------------------------
// Stratified review sampler

struct SamplerConfig {
    Duration period = kDay;
    /// Fixed review budget per period; unset means a fraction of the previous
    /// period's would-be-closed volume, never below `floor`.
    std::optional<std::int64_t> budget;
    double fraction = 0.01;
    std::int64_t floor = 10;
    std::uint64_t seed = 0;
};

/// Chooses which would-be-closed alerts go to a human anyway. Each period's
/// budget is split evenly over the categories expected in it (those seen
/// among the previous period's would-be-closed alerts plus any new ones),
/// with the remainder handed round-robin. Within a category the picks are
/// spread over the period by systematic sampling with a seeded random start,
/// so a category with the same volume as last period gets exactly its quota.
class Sampler {
public:
    explicit Sampler(SamplerConfig config = {});

    /// Counts one would-be-closed alert and returns whether to sample it.
    bool decide(std::string_view category, Timestamp t);
    /// Replays a recorded decision without drawing.
    void restore(std::string_view category, Timestamp t, bool sampled);
    /// Feeds back the human label of a sampled alert.
    void record_outcome(std::string_view category, Timestamp created_at, bool positive);

    std::int64_t budget() const noexcept { return budget_; }
    std::int64_t quota(std::string_view category) const;
    std::int64_t period_index() const noexcept { return period_; }
    const SamplerConfig& config() const noexcept { return config_; }

    struct Stratum {
        std::int64_t closed = 0;
        std::int64_t sampled = 0;
        std::int64_t resolved = 0;
        std::int64_t positive = 0;
    };
    /// Strata keyed by (period, category).
    const std::map<std::pair<std::int64_t, std::string>, Stratum>& strata() const noexcept { return strata_; }
    std::int64_t sampled_in_period(std::string_view category) const;

    /// Positives among all would-be-closed alerts: closed * positive /
    /// resolved per stratum, where a stratum without a resolved sample takes
    /// its category's rate pooled over periods (else the overall rate).
    double estimated_false_negatives() const;

private:
    void advance(Timestamp t);
    std::int64_t category_rank(std::string_view category) const;
    double stride_offset(const std::string& category) const;

    SamplerConfig config_;
    std::int64_t period_ = std::numeric_limits<std::int64_t>::min();
    std::int64_t budget_ = 0;
    std::int64_t sampled_total_ = 0;
    /// Would-be-closed counts per category in the previous period.
    std::map<std::string, std::int64_t, std::less<>> previous_;
    /// Categories expected this period in rank order.
    std::vector<std::string> expected_;
    std::map<std::string, std::int64_t, std::less<>> rank_;
    std::map<std::pair<std::int64_t, std::string>, Stratum> strata_;
};

// ---------------------------------------------------------------------------
// Queue

struct FeatureImpact {
    std::string name;
    double value = 0.0;
    double contribution = 0.0;
    friend bool operator==(const FeatureImpact&, const FeatureImpact&) = default;
};

struct QueueEntry {
    std::string alert_id;
    std::string tenant;
    std::string category;
    /// Probability times ten, rounded to one decimal.
    double threat_score = 0.0;
    double raw_probability = 0.0;
    /// Sorted by |contribution| descending.
    std::vector<FeatureImpact> top_features;
    Timestamp enqueued_at = 0.0;
    bool sampled_for_review = false;
    /// False when the alert bypassed the model (fail-open).
    bool scored = true;
    std::uint64_t model_version = 0;
    /// Arrival order; final tie-break.
    std::uint64_t sequence = 0;
};

double threat_score(double probability);

nlohmann::json to_json(const FeatureImpact& impact);
nlohmann::json to_json(const QueueEntry& entry);

/// Entries ordered by probability descending, then enqueue time, then
/// arrival order.
class TriageQueue {
public:
    void push(QueueEntry entry);
    bool erase(std::string_view alert_id);
    const QueueEntry* find(std::string_view alert_id) const;
    std::vector<QueueEntry> list(std::optional<std::string_view> tenant = std::nullopt,
                                 std::size_t limit = SIZE_MAX) const;
    std::size_t size() const noexcept { return index_.size(); }

private:
    struct Order {
        bool operator()(const QueueEntry& a, const QueueEntry& b) const;
    };
    std::set<QueueEntry, Order> entries_;
    std::unordered_map<std::string, std::set<QueueEntry, Order>::const_iterator> index_;
};

// ---------------------------------------------------------------------------
// Event log

/// Append-only JSON-lines log. Each line is one service event; offsets are
/// byte positions so a checkpoint can name the prefix it covers.
class EventLog {
public:
    EventLog() = default;
    explicit EventLog(const std::filesystem::path& path);

    bool is_open() const noexcept { return out_.is_open(); }
    /// Appends one line and returns the offset just past it.
    std::uint64_t append(const nlohmann::json& event);
    std::uint64_t offset() const noexcept { return offset_; }
    void flush();

    /// Every complete line with the offset where it starts. A torn final line
    /// (no newline) is ignored.
    static std::vector<std::pair<std::uint64_t, nlohmann::json>> read(const std::filesystem::path& path);

private:
    std::ofstream out_;
    std::uint64_t offset_ = 0;
};

// ---------------------------------------------------------------------------
// Service

struct ServiceConfig {
    FeatureConfig features = FeatureConfig::full();
    StoreConfig store;
    /// Probabilities below this are auto-closed unless sampled. Zero closes
    /// nothing; no production default is implied.
    double close_threshold = 0.0;
    SamplerConfig sampler;
    /// Label that counts as a positive for monitoring and retraining.
    LabelTarget target = LabelTarget::Investigated;
    /// Also exclude machine closures from the resolved counters.
    bool strict_counters = false;
    std::size_t top_features = 5;
    /// Persistence; empty disables it.
    std::filesystem::path state_dir;
    /// Events between automatic checkpoints; 0 disables them.
    std::size_t checkpoint_interval = 50000;
    /// Retraining.
    GbdtParams gbdt;
    double holdout_fraction = 0.2;
    double max_auc_drop = 0.02;
    /// Scoring latencies kept for percentiles.
    std::size_t latency_window = 100000;

    /// Reads a JSON object with any of the fields above (missing ones keep
    /// their defaults). Throws std::invalid_argument on bad values.
    static ServiceConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

enum class AlertStatus : std::uint8_t { Queued, AutoClosed, Resolved };
std::string_view to_string(AlertStatus status);

/// Where a training row came from. Only human resolutions ever produce one.
enum class Provenance : std::uint8_t { Human, SampledHuman };
std::string_view to_string(Provenance provenance);

struct ScoreResult {
    std::string alert_id;
    /// "queued" or "auto-closed".
    std::string disposition;
    QueueEntry entry;
    /// Reason the model was bypassed, when it was.
    std::optional<std::string> fail_open;
};

struct AlertState {
    Alert alert;
    AlertStatus status = AlertStatus::Queued;
    FeatureVector features;
    double raw_probability = 1.0;
    bool scored = false;
    bool would_close = false;
    bool sampled = false;
    bool in_store = false;
    std::uint64_t model_version = 0;
    std::vector<FeatureImpact> top_features;
    std::optional<ResolutionEvent> resolution;
};

struct TrainingRecord {
    std::string alert_id;
    Timestamp timestamp = 0.0;
    FeatureVector features;
    int label = 0;
    Provenance provenance = Provenance::Human;
};

struct LatencySummary {
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
    double max_ms = 0.0;
    std::size_t samples = 0;
};

struct ServiceMetrics {
    std::int64_t alerts = 0;
    std::int64_t auto_closed = 0;
    std::int64_t queued = 0;
    std::int64_t sampled = 0;
    std::int64_t resolved = 0;
    std::int64_t fail_open = 0;
    double alert_reduction = 0.0;
    /// From the sampled strata; zero until samples are resolved.
    double sampled_fnr = 0.0;
    double estimated_false_negatives = 0.0;
    std::int64_t true_positives = 0;
    std::size_t queue_depth = 0;
    LatencySummary latency;
    std::uint64_t model_version = 0;
    double close_threshold = 0.0;
    Timestamp watermark = 0.0;
};

nlohmann::json to_json(const ServiceMetrics& metrics);

struct ThresholdChange {
    double previous = 0.0;
    double current = 0.0;
    std::string actor;
    std::string at;
};

/// A change notification for live listeners.
struct QueueEvent {
    std::uint64_t sequence = 0;
    nlohmann::json payload;
};

/// The live loop: score, auto-close or enqueue, learn from resolutions.
/// Every public method is safe to call from multiple threads.
class TriageService {
public:
    /// Opens the service, recovering from `config.state_dir` when it holds a
    /// previous run's log.
    explicit TriageService(ServiceConfig config, std::optional<ModelArtifact> model = std::nullopt);
    /// Starts from a pre-built store (history loaded elsewhere). When state
    /// is persisted, a checkpoint is written immediately so recovery does not
    /// depend on the history.
    TriageService(ServiceConfig config, ActionCountStore store, std::optional<ModelArtifact> model);
    ~TriageService();

    TriageService(const TriageService&) = delete;
    TriageService& operator=(const TriageService&) = delete;

    /// Throws DuplicateAlert; model and store problems fail open.
    ScoreResult score_alert(Alert alert);

    /// Throws UnknownAlert, DuplicateResolution (already resolved or
    /// auto-closed), or LatenessExceeded.
    void ingest_feedback(ResolutionEvent resolution);

    std::vector<QueueEntry> queue_listing(std::optional<std::string> tenant = std::nullopt,
                                          std::size_t limit = SIZE_MAX) const;
    std::optional<AlertState> alert_state(std::string_view alert_id) const;

    ServiceMetrics metrics() const;

    double close_threshold() const;
    /// Throws std::invalid_argument outside [0, 1]. Audit-logged.
    ThresholdChange set_close_threshold(double value, std::string actor = "api");
    std::vector<ThresholdChange> threshold_audit() const;

    /// Human-labelled rows with the features recorded when each alert was
    /// scored, in creation order. Auto-closed alerts never appear.
    std::vector<TrainingRecord> training_history() const;
    TrainingSet training_set() const;

    /// Trains on the older part of the history, validates on the newest
    /// `holdout_fraction`, and swaps the model in unless its holdout AUC is
    /// more than `max_auc_drop` below the current model's. Throws
    /// ValidationRegression (the old model stays), EmptyData or
    /// DegenerateLabels.
    ModelArtifact retrain();
    /// Validated swap of an externally trained model against the same holdout.
    void install_model(ModelArtifact model, bool validate = true);

    std::shared_ptr<const ModelArtifact> model() const;
    std::uint64_t model_version() const;

    /// Writes the store checkpoint and the log offset it covers.
    void checkpoint();
    /// Canonical store bytes, for comparing states.
    std::string store_checkpoint() const;

    const ServiceConfig& config() const noexcept { return config_; }
    const FeatureAssembler& assembler() const noexcept { return assembler_; }

    /// Blocks until an event newer than `after` exists or the timeout passes,
    /// then returns the newer events still buffered.
    std::vector<QueueEvent> wait_events(std::uint64_t after, std::chrono::milliseconds timeout) const;
    std::uint64_t last_event() const;
    /// Wakes every waiter; used on shutdown.
    void close_events();
    bool events_closed() const;

private:
    struct Decision;
    struct ModelSlot {
        std::shared_ptr<const ModelArtifact> model;
        std::uint64_t version = 0;
    };

    void start(std::optional<ModelArtifact> model, bool fresh_store);
    void recover();
    void apply_alert(const nlohmann::json& event, bool touch_store, bool replaying);
    void apply_resolution(const nlohmann::json& event, bool touch_store);
    void apply_threshold(const nlohmann::json& event);
    void log_event(const nlohmann::json& event);
    void maybe_checkpoint();
    void write_checkpoint_locked();
    void publish(nlohmann::json payload);
    ModelSlot current_model() const;
    void swap_model(ModelArtifact model, bool persist);
    std::vector<FeatureImpact> impacts(const ModelArtifact& model, const FeatureVector& features) const;
    double holdout_auc(const ModelArtifact& model, const TrainingSet& holdout) const;
    std::pair<TrainingSet, TrainingSet> split_history() const;

    ServiceConfig config_;
    FeatureAssembler assembler_;
    ActionCountStore store_;

    mutable std::mutex state_mu_;
    double threshold_;
    Sampler sampler_;
    TriageQueue queue_;
    std::unordered_map<std::string, AlertState> alerts_;
    std::vector<TrainingRecord> history_;
    std::vector<ThresholdChange> audit_;
    std::uint64_t sequence_ = 0;
    std::int64_t auto_closed_ = 0;
    std::int64_t queued_ = 0;
    std::int64_t sampled_ = 0;
    std::int64_t resolved_ = 0;
    std::int64_t fail_open_ = 0;
    std::int64_t true_positives_ = 0;
    std::deque<double> latencies_ms_;
    EventLog log_;
    std::size_t since_checkpoint_ = 0;

    mutable std::mutex model_mu_;
    ModelSlot model_;
    std::mutex retrain_mu_;

    mutable std::mutex events_mu_;
    mutable std::condition_variable events_cv_;
    std::deque<QueueEvent> events_;
    std::uint64_t event_sequence_ = 0;
    bool events_closed_ = false;
};

// ---------------------------------------------------------------------------
// Stream replay driver

struct StreamReplayOptions {
    /// Event-time speed-up; 0 replays as fast as possible.
    double speed = 0.0;
    /// Deliver recorded resolutions for alerts that reached the queue.
    bool deliver_resolutions = true;
};

struct StreamReplayReport {
    std::size_t alerts = 0;
    std::size_t queued = 0;
    std::size_t auto_closed = 0;
    std::size_t resolutions = 0;
    std::size_t rejected = 0;
    double wall_seconds = 0.0;
    /// Positives among would-be-closed alerts over all positives, from the
    /// recorded labels; the quantity the sampled estimate targets.
    double true_fnr = 0.0;
};

/// Feeds alerts (sorted by creation time, resolutions attached) through the
/// service in event-time order. A resolution is delivered at its resolved_at
/// when its alert is still open in the queue; auto-closed alerts never reach
/// an analyst, so their recorded resolutions only count towards true_fnr.
StreamReplayReport replay_stream(TriageService& service, const std::vector<Alert>& alerts,
                                 const StreamReplayOptions& options = {});

}  // namespace aact
