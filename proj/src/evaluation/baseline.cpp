#include "aact/errors.hpp"
#include "aact/evaluation.hpp"

namespace aact {

std::vector<double> baseline_scores(const ActionCountStore& store, std::span<const Alert> alerts,
                                    const FeatureConfig& config) {
    config.windows.validate();
    const bool full = config.workflow == Workflow::Full;
    const ActionSet set = full ? ActionSet::Investigation : ActionSet::MaliciousLabel;
    const Duration delta = full ? config.windows.deltas.back() : config.windows.deltas.front();
    const auto view = store.snapshot();
    std::vector<double> out;
    out.reserve(alerts.size());
    for (const Alert& a : alerts) {
        out.push_back(view.category_rate(Scope::GlobalCategory, a.tenant_id, a.category.value, set, a.created_at,
                                         delta));
    }
    return out;
}

std::vector<double> baseline_scores(const FeatureTable& dump, const FeatureConfig& config) {
    const std::size_t slot = baseline_slot(config);
    if (dump.feature_names != feature_names(config)) {
        throw DimensionMismatch("feature dump layout differs from the configured workflow");
    }
    std::vector<double> out;
    out.reserve(dump.rows.size());
    for (const auto& row : dump.rows) out.push_back(row.features.at(slot));
    return out;
}

}  // namespace aact
