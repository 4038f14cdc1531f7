#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "aact/alert_io.hpp"
#include "aact/errors.hpp"
#include "aact/evaluation.hpp"
#include "aact/triage.hpp"

namespace aact {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kCheckpointFormat = "aact-service-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_atomically(const fs::path& path, const std::string& bytes) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

ResolutionEvent machine_closure(const Alert& alert) {
    ResolutionEvent r;
    r.alert_id = alert.id;
    r.action = ActionKind::NotInvestigated;
    r.label = LabelKind::Benign;
    r.resolved_at = alert.created_at;
    r.analyst_id = "auto-close";
    return r;
}

json impacts_to_json(const std::vector<FeatureImpact>& impacts) {
    json out = json::array();
    for (const auto& f : impacts) out.push_back(json::array({f.name, f.value, f.contribution}));
    return out;
}

std::vector<FeatureImpact> impacts_from_json(const json& j) {
    std::vector<FeatureImpact> out;
    for (const auto& row : j) out.push_back({row.at(0).get<std::string>(), row.at(1).get<double>(), row.at(2).get<double>()});
    return out;
}

}  // namespace

json to_json(const FeatureImpact& impact) {
    return {{"name", impact.name},
            {"value", impact.value},
            {"contribution", impact.contribution},
            {"direction", impact.contribution > 0 ? "+" : impact.contribution < 0 ? "-" : "0"}};
}

json to_json(const QueueEntry& e) {
    json features = json::array();
    for (const auto& f : e.top_features) features.push_back(to_json(f));
    return {{"alert_id", e.alert_id},
            {"tenant", e.tenant},
            {"category", e.category},
            {"threat_score", e.threat_score},
            {"raw_probability", e.raw_probability},
            {"top_features", std::move(features)},
            {"enqueued_at", e.enqueued_at},
            {"sampled_for_review", e.sampled_for_review},
            {"scored", e.scored},
            {"model_version", e.model_version}};
}

json to_json(const ServiceMetrics& m) {
    return {{"alerts", m.alerts},
            {"auto_closed", m.auto_closed},
            {"queued", m.queued},
            {"sampled", m.sampled},
            {"resolved", m.resolved},
            {"fail_open", m.fail_open},
            {"alert_reduction", m.alert_reduction},
            {"sampled_fnr", m.sampled_fnr},
            {"estimated_false_negatives", m.estimated_false_negatives},
            {"true_positives", m.true_positives},
            {"queue_depth", m.queue_depth},
            {"latency_ms",
             {{"p50", m.latency.p50_ms},
              {"p95", m.latency.p95_ms},
              {"p99", m.latency.p99_ms},
              {"max", m.latency.max_ms},
              {"samples", m.latency.samples}}},
            {"model_version", m.model_version},
            {"close_threshold", m.close_threshold},
            {"watermark", m.watermark}};
}

std::string_view to_string(AlertStatus status) {
    switch (status) {
        case AlertStatus::Queued:
            return "queued";
        case AlertStatus::AutoClosed:
            return "auto-closed";
        case AlertStatus::Resolved:
            return "resolved";
    }
    return "unknown";
}

std::string_view to_string(Provenance provenance) {
    return provenance == Provenance::Human ? "human" : "sampled-human";
}

// ---------------------------------------------------------------------------
// ServiceConfig

ServiceConfig ServiceConfig::from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("service config must be an object");
    ServiceConfig c;
    try {
        if (j.contains("workflow")) {
            const auto w = parse_workflow(j["workflow"].get<std::string>());
            if (!w) throw std::invalid_argument("unknown workflow");
            c.features = *w == Workflow::Full ? FeatureConfig::full() : FeatureConfig::ait();
            c.target = default_target(*w);
        }
        if (j.contains("recency_cap_seconds")) c.features.recency_cap = j["recency_cap_seconds"].get<double>();
        if (j.contains("close_threshold")) c.close_threshold = j["close_threshold"].get<double>();
        if (j.contains("sample_budget") && !j["sample_budget"].is_null()) {
            c.sampler.budget = j["sample_budget"].get<std::int64_t>();
        }
        if (j.contains("sample_fraction")) c.sampler.fraction = j["sample_fraction"].get<double>();
        if (j.contains("sample_floor")) c.sampler.floor = j["sample_floor"].get<std::int64_t>();
        if (j.contains("sample_period_seconds")) c.sampler.period = j["sample_period_seconds"].get<double>();
        if (j.contains("sampler_seed")) c.sampler.seed = j["sampler_seed"].get<std::uint64_t>();
        if (j.contains("lateness_seconds")) c.store.lateness = j["lateness_seconds"].get<double>();
        if (j.contains("retention_seconds") && !j["retention_seconds"].is_null()) {
            c.store.retention = j["retention_seconds"].get<double>();
        }
        if (j.contains("target")) {
            const auto t = j["target"].get<std::string>();
            if (t == "investigated") {
                c.target = LabelTarget::Investigated;
            } else if (t == "malicious") {
                c.target = LabelTarget::Malicious;
            } else {
                throw std::invalid_argument("unknown target '" + t + "'");
            }
        }
        if (j.contains("strict_counters")) c.strict_counters = j["strict_counters"].get<bool>();
        if (j.contains("top_features")) c.top_features = j["top_features"].get<std::size_t>();
        if (j.contains("state_dir")) c.state_dir = j["state_dir"].get<std::string>();
        if (j.contains("checkpoint_interval")) c.checkpoint_interval = j["checkpoint_interval"].get<std::size_t>();
        if (j.contains("holdout_fraction")) c.holdout_fraction = j["holdout_fraction"].get<double>();
        if (j.contains("max_auc_drop")) c.max_auc_drop = j["max_auc_drop"].get<double>();
        if (j.contains("gbdt")) {
            const auto& g = j["gbdt"];
            c.gbdt.n_trees = g.value("n_trees", c.gbdt.n_trees);
            c.gbdt.max_depth = g.value("max_depth", c.gbdt.max_depth);
            c.gbdt.learning_rate = g.value("learning_rate", c.gbdt.learning_rate);
            c.gbdt.subsample = g.value("subsample", c.gbdt.subsample);
            c.gbdt.min_samples_leaf = g.value("min_samples_leaf", c.gbdt.min_samples_leaf);
            c.gbdt.seed = g.value("seed", c.gbdt.seed);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad service config: ") + e.what());
    }
    if (!(c.close_threshold >= 0 && c.close_threshold <= 1)) {
        throw std::invalid_argument("close_threshold must lie in [0, 1]");
    }
    if (!(c.holdout_fraction > 0 && c.holdout_fraction < 1)) {
        throw std::invalid_argument("holdout_fraction must lie in (0, 1)");
    }
    return c;
}

json ServiceConfig::to_json() const {
    json j = {{"workflow", std::string(aact::to_string(features.workflow))},
              {"recency_cap_seconds", features.recency_cap},
              {"close_threshold", close_threshold},
              {"sample_budget", sampler.budget ? json(*sampler.budget) : json(nullptr)},
              {"sample_fraction", sampler.fraction},
              {"sample_floor", sampler.floor},
              {"sample_period_seconds", sampler.period},
              {"sampler_seed", sampler.seed},
              {"lateness_seconds", store.lateness},
              {"retention_seconds", store.retention ? json(*store.retention) : json(nullptr)},
              {"target", target == LabelTarget::Investigated ? "investigated" : "malicious"},
              {"strict_counters", strict_counters},
              {"top_features", top_features},
              {"state_dir", state_dir.string()},
              {"checkpoint_interval", checkpoint_interval},
              {"holdout_fraction", holdout_fraction},
              {"max_auc_drop", max_auc_drop},
              {"gbdt",
               {{"n_trees", gbdt.n_trees},
                {"max_depth", gbdt.max_depth},
                {"learning_rate", gbdt.learning_rate},
                {"subsample", gbdt.subsample},
                {"min_samples_leaf", gbdt.min_samples_leaf},
                {"seed", gbdt.seed}}}};
    return j;
}

// ---------------------------------------------------------------------------
// Construction and recovery

TriageService::TriageService(ServiceConfig config, std::optional<ModelArtifact> model)
    : config_(std::move(config)),
      assembler_(config_.features),
      store_(config_.store),
      threshold_(config_.close_threshold),
      sampler_(config_.sampler) {
    start(std::move(model), false);
}

TriageService::TriageService(ServiceConfig config, ActionCountStore store, std::optional<ModelArtifact> model)
    : config_(std::move(config)),
      assembler_(config_.features),
      store_(std::move(store)),
      threshold_(config_.close_threshold),
      sampler_(config_.sampler) {
    start(std::move(model), true);
}

TriageService::~TriageService() {
    close_events();
    std::lock_guard lock(state_mu_);
    if (log_.is_open()) log_.flush();
}

void TriageService::start(std::optional<ModelArtifact> model, bool fresh_store) {
    if (!(threshold_ >= 0 && threshold_ <= 1)) throw std::invalid_argument("close_threshold must lie in [0, 1]");
    if (config_.state_dir.empty()) {
        if (model) swap_model(std::move(*model), false);
        return;
    }
    fs::create_directories(config_.state_dir);
    const fs::path log_path = config_.state_dir / "events.jsonl";
    if (fresh_store) {
        if (fs::exists(log_path) && fs::file_size(log_path) > 0) {
            throw std::invalid_argument("state directory already holds a run; cannot seed a new store into it");
        }
        log_ = EventLog(log_path);
        std::lock_guard lock(state_mu_);
        write_checkpoint_locked();
    } else {
        recover();
        log_ = EventLog(log_path);
    }
    if (model) {
        swap_model(std::move(*model), true);
    } else if (fs::exists(config_.state_dir / "model.json")) {
        ModelArtifact stored = deserialize(read_file(config_.state_dir / "model.json"));
        std::lock_guard lock(model_mu_);
        model_.model = std::make_shared<const ModelArtifact>(std::move(stored));
        if (model_.version == 0) model_.version = 1;
    }
    // A restart with a different configured threshold is a change like any other.
    if (config_.close_threshold != threshold_) set_close_threshold(config_.close_threshold, "config");
}

void TriageService::recover() {
    const fs::path ckpt = config_.state_dir / "checkpoint";
    std::uint64_t covered = 0;
    if (fs::exists(ckpt)) {
        std::istringstream in(read_file(ckpt));
        std::string header;
        std::getline(in, header);
        json meta;
        try {
            meta = json::parse(header);
        } catch (const json::exception& e) {
            throw CorruptCheckpoint(std::string("service checkpoint header: ") + e.what());
        }
        if (meta.value("format", std::string{}) != kCheckpointFormat) throw CorruptCheckpoint("not a service checkpoint");
        if (meta.value("version", 0) != kCheckpointVersion) throw VersionMismatch("service checkpoint version");
        covered = meta.at("log_offset").get<std::uint64_t>();
        store_ = ActionCountStore::load_checkpoint(in);
    }
    std::lock_guard lock(state_mu_);
    for (const auto& [offset, event] : EventLog::read(config_.state_dir / "events.jsonl")) {
        const bool touch_store = offset >= covered;
        const auto type = event.at("type").get<std::string>();
        if (type == "alert") {
            apply_alert(event, touch_store, true);
        } else if (type == "resolution") {
            apply_resolution(event, touch_store);
        } else if (type == "threshold") {
            apply_threshold(event);
        } else if (type == "model") {
            std::lock_guard model_lock(model_mu_);
            model_.version = event.at("version").get<std::uint64_t>();
        }
    }
}

// ---------------------------------------------------------------------------
// Event application; every state change goes through these so a replayed log
// rebuilds exactly what the live calls produced.

void TriageService::apply_alert(const json& event, bool touch_store, bool replaying) {
    AlertState state;
    state.alert = parse_alert(event.at("alert"));
    state.features = event.at("features").get<FeatureVector>();
    state.scored = event.at("scored").get<bool>();
    state.raw_probability = event.at("probability").get<double>();
    state.would_close = event.at("would_close").get<bool>();
    state.sampled = event.at("sampled").get<bool>();
    state.in_store = event.at("in_store").get<bool>();
    state.model_version = event.at("model_version").get<std::uint64_t>();
    state.top_features = impacts_from_json(event.at("top"));
    const Alert& alert = state.alert;

    const bool closed = state.would_close && !state.sampled;
    if (touch_store && state.in_store) {
        store_.record_alert_created(alert);
        if (closed && !config_.strict_counters) {
            store_.record_resolution(machine_closure(alert), ResolutionOrigin::Machine);
        }
    }
    if (replaying && state.would_close) sampler_.restore(alert.category.value, alert.created_at, state.sampled);

    ++sequence_;
    if (!state.scored) ++fail_open_;
    if (closed) {
        state.status = AlertStatus::AutoClosed;
        state.resolution = machine_closure(alert);
        ++auto_closed_;
        publish({{"type", "closed"}, {"alert_id", alert.id}, {"raw_probability", state.raw_probability}});
    } else {
        state.status = AlertStatus::Queued;
        ++queued_;
        if (state.sampled) ++sampled_;
        QueueEntry entry;
        entry.alert_id = alert.id;
        entry.tenant = alert.tenant_id;
        entry.category = alert.category.value;
        entry.raw_probability = state.raw_probability;
        entry.threat_score = threat_score(state.raw_probability);
        entry.top_features = state.top_features;
        entry.enqueued_at = alert.created_at;
        entry.sampled_for_review = state.sampled;
        entry.scored = state.scored;
        entry.model_version = state.model_version;
        entry.sequence = sequence_;
        publish({{"type", "enqueued"}, {"entry", to_json(entry)}});
        queue_.push(std::move(entry));
    }
    const std::string id = alert.id;
    alerts_.insert_or_assign(id, std::move(state));
}

void TriageService::apply_resolution(const json& event, bool touch_store) {
    ResolutionEvent r = resolution_from_json(event.at("resolution"));
    auto it = alerts_.find(r.alert_id);
    if (it == alerts_.end()) throw CorruptCheckpoint("log resolves unknown alert " + r.alert_id);
    AlertState& state = it->second;
    if (touch_store && state.in_store) store_.record_resolution(r, ResolutionOrigin::Human);
    const int label = label_of(r, config_.target);
    history_.push_back({state.alert.id, state.alert.created_at, state.features, label,
                        state.sampled ? Provenance::SampledHuman : Provenance::Human});
    if (state.sampled) sampler_.record_outcome(state.alert.category.value, state.alert.created_at, label == 1);
    if (state.scored && !state.would_close && label == 1) ++true_positives_;
    ++resolved_;
    state.status = AlertStatus::Resolved;
    state.resolution = std::move(r);
    queue_.erase(state.alert.id);
    publish({{"type", "resolved"}, {"alert_id", state.alert.id}, {"label", label}});
}

void TriageService::apply_threshold(const json& event) {
    ThresholdChange c;
    c.previous = event.at("previous").get<double>();
    c.current = event.at("current").get<double>();
    c.actor = event.at("actor").get<std::string>();
    c.at = event.at("at").get<std::string>();
    threshold_ = c.current;
    audit_.push_back(c);
    publish({{"type", "threshold"}, {"previous", c.previous}, {"current", c.current}});
}

void TriageService::log_event(const json& event) {
    if (log_.is_open()) log_.append(event);
}

void TriageService::maybe_checkpoint() {
    if (config_.checkpoint_interval == 0 || !log_.is_open()) return;
    if (++since_checkpoint_ >= config_.checkpoint_interval) write_checkpoint_locked();
}

void TriageService::write_checkpoint_locked() {
    if (config_.state_dir.empty()) return;
    log_.flush();
    std::ostringstream out;
    out << json{{"format", kCheckpointFormat}, {"version", kCheckpointVersion}, {"log_offset", log_.offset()}}.dump()
        << '\n';
    store_.save_checkpoint(out);
    write_atomically(config_.state_dir / "checkpoint", out.str());
    since_checkpoint_ = 0;
}

void TriageService::checkpoint() {
    std::lock_guard lock(state_mu_);
    write_checkpoint_locked();
}

std::string TriageService::store_checkpoint() const {
    std::lock_guard lock(state_mu_);
    std::ostringstream out;
    store_.save_checkpoint(out);
    return out.str();
}

// ---------------------------------------------------------------------------
// Scoring and feedback

std::vector<FeatureImpact> TriageService::impacts(const ModelArtifact& model, const FeatureVector& features) const {
    std::vector<FeatureImpact> out;
    if (config_.top_features == 0 || model.kind() == ModelKind::Forest) return out;
    const Attribution a = attribute(model, features);
    std::vector<std::size_t> order(a.contributions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(a.contributions[x]) > std::abs(a.contributions[y]);
    });
    for (std::size_t k = 0; k < std::min(config_.top_features, order.size()); ++k) {
        const std::size_t f = order[k];
        out.push_back({model.feature_names[f], features[f], a.contributions[f]});
    }
    return out;
}

ScoreResult TriageService::score_alert(Alert alert) {
    const auto started = std::chrono::steady_clock::now();
    if (alert.category.value.empty()) assign_category(alert);
    std::unique_lock lock(state_mu_);
    if (alerts_.count(alert.id)) throw DuplicateAlert("alert " + alert.id + " was already submitted");

    const bool lagging = store_.event_count() > 0 && alert.created_at < store_.watermark() - config_.store.lateness;
    const FeatureVector features = assembler_.assemble(store_, alert);
    const ModelSlot slot = current_model();

    std::optional<std::string> fail_open;
    double probability = 1.0;
    std::vector<FeatureImpact> top;
    if (!slot.model) {
        fail_open = "model unavailable";
    } else if (lagging) {
        fail_open = "store lagging";
    } else {
        try {
            probability = predict(*slot.model, features);
            top = impacts(*slot.model, features);
        } catch (const Error& e) {
            fail_open = std::string("model unavailable: ") + e.what();
            probability = 1.0;
            top.clear();
        }
    }
    const bool scored = !fail_open;
    const bool would_close = scored && probability < threshold_;
    const bool sampled = would_close && sampler_.decide(alert.category.value, alert.created_at);

    const json event = {{"type", "alert"},
                        {"alert", alert_to_json(alert)},
                        {"features", features},
                        {"scored", scored},
                        {"probability", probability},
                        {"would_close", would_close},
                        {"sampled", sampled},
                        {"in_store", !lagging},
                        {"model_version", slot.version},
                        {"top", impacts_to_json(top)},
                        {"threshold", threshold_}};
    log_event(event);
    apply_alert(event, true, false);
    // Only after the store holds the event may a checkpoint claim to cover it.
    maybe_checkpoint();

    const AlertState& state = alerts_.at(alert.id);
    ScoreResult result;
    result.alert_id = alert.id;
    result.disposition = state.status == AlertStatus::AutoClosed ? "auto-closed" : "queued";
    result.fail_open = fail_open;
    if (const QueueEntry* e = queue_.find(alert.id)) {
        result.entry = *e;
    } else {
        result.entry.alert_id = alert.id;
        result.entry.tenant = alert.tenant_id;
        result.entry.category = alert.category.value;
        result.entry.raw_probability = probability;
        result.entry.threat_score = threat_score(probability);
        result.entry.top_features = top;
        result.entry.enqueued_at = alert.created_at;
        result.entry.scored = scored;
        result.entry.model_version = slot.version;
        result.entry.sequence = sequence_;
    }

    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    latencies_ms_.push_back(ms);
    while (latencies_ms_.size() > config_.latency_window) latencies_ms_.pop_front();
    return result;
}

void TriageService::ingest_feedback(ResolutionEvent resolution) {
    std::lock_guard lock(state_mu_);
    const auto it = alerts_.find(resolution.alert_id);
    if (it == alerts_.end()) throw UnknownAlert("no alert " + resolution.alert_id);
    const AlertState& state = it->second;
    if (state.status != AlertStatus::Queued) {
        throw DuplicateResolution("alert " + resolution.alert_id + " is already " +
                                  std::string(to_string(state.status)));
    }
    if (resolution.resolved_at < state.alert.created_at) {
        throw MalformedRecord("resolution precedes the alert's creation");
    }
    if (state.in_store && store_.event_count() > 0 &&
        resolution.resolved_at < store_.watermark() - config_.store.lateness) {
        throw LatenessExceeded("resolution is older than the lateness bound");
    }
    const json event = {{"type", "resolution"}, {"resolution", resolution_to_json(resolution)}, {"origin", "human"}};
    log_event(event);
    apply_resolution(event, true);
    maybe_checkpoint();
}

// ---------------------------------------------------------------------------
// Queries

std::vector<QueueEntry> TriageService::queue_listing(std::optional<std::string> tenant, std::size_t limit) const {
    std::lock_guard lock(state_mu_);
    if (tenant) return queue_.list(std::string_view(*tenant), limit);
    return queue_.list(std::nullopt, limit);
}

std::optional<AlertState> TriageService::alert_state(std::string_view alert_id) const {
    std::lock_guard lock(state_mu_);
    const auto it = alerts_.find(std::string(alert_id));
    if (it == alerts_.end()) return std::nullopt;
    return it->second;
}

ServiceMetrics TriageService::metrics() const {
    ServiceMetrics m;
    std::vector<double> lat;
    {
        std::lock_guard lock(state_mu_);
        m.alerts = static_cast<std::int64_t>(alerts_.size());
        m.auto_closed = auto_closed_;
        m.queued = queued_;
        m.sampled = sampled_;
        m.resolved = resolved_;
        m.fail_open = fail_open_;
        m.true_positives = true_positives_;
        m.estimated_false_negatives = sampler_.estimated_false_negatives();
        m.queue_depth = queue_.size();
        m.close_threshold = threshold_;
        m.watermark = store_.watermark();
        lat.assign(latencies_ms_.begin(), latencies_ms_.end());
    }
    m.alert_reduction = m.alerts ? static_cast<double>(m.auto_closed) / static_cast<double>(m.alerts) : 0.0;
    const double denom = m.estimated_false_negatives + static_cast<double>(m.true_positives);
    m.sampled_fnr = denom > 0 ? m.estimated_false_negatives / denom : 0.0;
    if (!lat.empty()) {
        std::sort(lat.begin(), lat.end());
        auto rank = [&](double q) {
            const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(lat.size())));
            return lat[std::min(lat.size() - 1, k == 0 ? 0 : k - 1)];
        };
        m.latency = {rank(0.50), rank(0.95), rank(0.99), lat.back(), lat.size()};
    }
    m.model_version = model_version();
    return m;
}

double TriageService::close_threshold() const {
    std::lock_guard lock(state_mu_);
    return threshold_;
}

ThresholdChange TriageService::set_close_threshold(double value, std::string actor) {
    if (!(value >= 0 && value <= 1)) throw std::invalid_argument("close threshold must lie in [0, 1]");
    std::lock_guard lock(state_mu_);
    const json event = {
        {"type", "threshold"}, {"previous", threshold_}, {"current", value}, {"actor", actor}, {"at", utc_now()}};
    log_event(event);
    apply_threshold(event);
    return audit_.back();
}

std::vector<ThresholdChange> TriageService::threshold_audit() const {
    std::lock_guard lock(state_mu_);
    return audit_;
}

std::vector<TrainingRecord> TriageService::training_history() const {
    std::vector<TrainingRecord> out;
    {
        std::lock_guard lock(state_mu_);
        out = history_;
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TrainingRecord& a, const TrainingRecord& b) { return a.timestamp < b.timestamp; });
    return out;
}

TrainingSet TriageService::training_set() const {
    TrainingSet data(assembler_.names());
    for (const auto& r : training_history()) data.add(r.features, r.label, r.timestamp, r.alert_id);
    return data;
}

// ---------------------------------------------------------------------------
// Models

TriageService::ModelSlot TriageService::current_model() const {
    std::lock_guard lock(model_mu_);
    return model_;
}

std::shared_ptr<const ModelArtifact> TriageService::model() const { return current_model().model; }

std::uint64_t TriageService::model_version() const { return current_model().version; }

void TriageService::swap_model(ModelArtifact model, bool persist) {
    if (model.feature_names != assembler_.names()) {
        throw DimensionMismatch("model features differ from the service's feature layout");
    }
    std::string bytes;
    if (persist && !config_.state_dir.empty()) bytes = serialize(model);
    auto next = std::make_shared<const ModelArtifact>(std::move(model));
    std::lock_guard lock(state_mu_);
    std::uint64_t version;
    {
        std::lock_guard model_lock(model_mu_);
        model_.model = std::move(next);
        version = ++model_.version;
    }
    if (!bytes.empty()) {
        write_atomically(config_.state_dir / "model.json", bytes);
        log_event({{"type", "model"}, {"version", version}});
    }
    publish({{"type", "model"}, {"version", version}});
}

std::pair<TrainingSet, TrainingSet> TriageService::split_history() const {
    const TrainingSet all = training_set();
    if (all.empty()) throw EmptyData("no human-resolved alerts to train on");
    const auto n = all.rows();
    auto holdout = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config_.holdout_fraction));
    holdout = std::clamp<std::size_t>(holdout, 1, n > 1 ? n - 1 : 1);
    std::vector<std::size_t> head, tail;
    for (std::size_t i = 0; i < n; ++i) (i < n - holdout ? head : tail).push_back(i);
    return {all.subset(head), all.subset(tail)};
}

double TriageService::holdout_auc(const ModelArtifact& model, const TrainingSet& holdout) const {
    return roc_auc(predict_all(model, holdout), holdout.labels());
}

ModelArtifact TriageService::retrain() {
    std::lock_guard guard(retrain_mu_);
    auto [train, holdout] = split_history();
    ModelArtifact candidate = train_gbdt(train, config_.gbdt);
    if (const auto current = model()) {
        const double old_auc = holdout_auc(*current, holdout);
        const double new_auc = holdout_auc(candidate, holdout);
        if (new_auc < old_auc - config_.max_auc_drop) {
            throw ValidationRegression("holdout AUC " + format_number(new_auc) + " is below the current model's " +
                                       format_number(old_auc));
        }
    }
    swap_model(candidate, true);
    return candidate;
}

void TriageService::install_model(ModelArtifact model, bool validate) {
    std::lock_guard guard(retrain_mu_);
    if (model.feature_names != assembler_.names()) {
        throw DimensionMismatch("model features differ from the service's feature layout");
    }
    const auto current = this->model();
    if (validate && current) {
        const auto holdout = split_history().second;
        const double old_auc = holdout_auc(*current, holdout);
        const double new_auc = holdout_auc(model, holdout);
        if (new_auc < old_auc - config_.max_auc_drop) {
            throw ValidationRegression("holdout AUC " + format_number(new_auc) + " is below the current model's " +
                                       format_number(old_auc));
        }
    }
    swap_model(std::move(model), true);
}

// ---------------------------------------------------------------------------
// Live event feed

void TriageService::publish(json payload) {
    std::lock_guard lock(events_mu_);
    events_.push_back({++event_sequence_, std::move(payload)});
    while (events_.size() > 4096) events_.pop_front();
    events_cv_.notify_all();
}

std::vector<QueueEvent> TriageService::wait_events(std::uint64_t after, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(events_mu_);
    events_cv_.wait_for(lock, timeout, [&] { return events_closed_ || event_sequence_ > after; });
    std::vector<QueueEvent> out;
    if (!events_.empty() && events_.front().sequence > after + 1) {
        // The listener fell behind the buffer; it should reload the queue.
        out.push_back({events_.front().sequence - 1, json{{"type", "resync"}}});
    }
    for (const auto& e : events_) {
        if (e.sequence > after) out.push_back(e);
    }
    return out;
}

std::uint64_t TriageService::last_event() const {
    std::lock_guard lock(events_mu_);
    return event_sequence_;
}

void TriageService::close_events() {
    std::lock_guard lock(events_mu_);
    events_closed_ = true;
    events_cv_.notify_all();
}

bool TriageService::events_closed() const {
    std::lock_guard lock(events_mu_);
    return events_closed_;
}

}  // namespace aact
