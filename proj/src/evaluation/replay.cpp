#include <algorithm>
#include <queue>
#include <stdexcept>

#include "aact/errors.hpp"
#include "aact/pipeline.hpp"

namespace aact {

LabelTarget default_target(Workflow workflow) {
    return workflow == Workflow::Full ? LabelTarget::Investigated : LabelTarget::Malicious;
}

int label_of(const ResolutionEvent& resolution, LabelTarget target) {
    if (target == LabelTarget::Investigated) return resolution.action == ActionKind::Investigated ? 1 : 0;
    return resolution.label == LabelKind::Malicious ? 1 : 0;
}

namespace {

struct Pending {
    Timestamp resolved_at;
    std::size_t alert;
};

struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
        return a.resolved_at != b.resolved_at ? a.resolved_at > b.resolved_at : a.alert > b.alert;
    }
};

// Walks the merged event stream; `visit(i)` runs just before alert i is
// recorded, after every resolution up to its creation time.
template <typename Visit>
void replay(const std::vector<Alert>& alerts, ActionCountStore& store, Visit visit) {
    std::priority_queue<Pending, std::vector<Pending>, Later> pending;
    auto flush = [&](Timestamp until, bool all) {
        while (!pending.empty() && (all || pending.top().resolved_at <= until)) {
            ResolutionEvent r = *alerts[pending.top().alert].resolution;
            r.alert_id = alerts[pending.top().alert].id;
            pending.pop();
            store.record_resolution(r);
        }
    };
    for (std::size_t i = 0; i < alerts.size(); ++i) {
        const Alert& a = alerts[i];
        if (i && a.created_at < alerts[i - 1].created_at) {
            throw std::invalid_argument("alerts must be sorted by creation time");
        }
        flush(a.created_at, false);
        visit(i);
        store.record_alert_created(a);
        if (a.resolution) pending.push({a.resolution->resolved_at, i});
    }
    flush(0.0, true);
}

}  // namespace

FeatureTable featurize(const std::vector<Alert>& alerts, const FeatureConfig& config, const ReplayOptions& options) {
    const FeatureAssembler assembler(config);
    const LabelTarget target = options.target.value_or(default_target(config.workflow));
    FeatureTable table;
    table.feature_names = assembler.names();
    if (alerts.empty()) return table;

    ActionCountStore store(options.store);
    const Timestamp emit_from = alerts.front().created_at + options.warmup;
    replay(alerts, store, [&](std::size_t i) {
        const Alert& a = alerts[i];
        if (!a.resolution || a.created_at < emit_from) return;
        table.rows.push_back(
            {a.id, a.tenant_id, a.created_at, label_of(*a.resolution, target), assembler.assemble(store, a)});
    });
    return table;
}

ActionCountStore build_store(const std::vector<Alert>& alerts, StoreConfig config) {
    ActionCountStore store(config);
    replay(alerts, store, [](std::size_t) {});
    return store;
}

TrainingSet to_training_set(const FeatureTable& table) {
    TrainingSet data(table.feature_names);
    for (const auto& row : table.rows) data.add(row.features, row.label, row.timestamp, row.alert_id);
    return data;
}

}  // namespace aact
