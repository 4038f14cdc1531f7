#include "aact/features.hpp"

#include <algorithm>
#include <stdexcept>

namespace aact {

namespace {

std::string window_suffix(Duration delta) {
    if (delta >= kDay && static_cast<long long>(delta) % static_cast<long long>(kDay) == 0) {
        return std::to_string(static_cast<long long>(delta / kDay)) + "d";
    }
    if (delta >= kHour && static_cast<long long>(delta) % static_cast<long long>(kHour) == 0) {
        return std::to_string(static_cast<long long>(delta / kHour)) + "h";
    }
    return std::to_string(static_cast<long long>(delta)) + "s";
}

void check_increasing(const std::vector<Duration>& values, const char* what) {
    if (values.empty()) throw std::invalid_argument(std::string(what) + " must not be empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0)) throw std::invalid_argument(std::string(what) + " must be positive");
        if (i && !(values[i] > values[i - 1])) {
            throw std::invalid_argument(std::string(what) + " must be strictly increasing");
        }
    }
}

}  // namespace

std::string_view to_string(Workflow workflow) {
    return workflow == Workflow::Full ? "full" : "ait";
}

std::optional<Workflow> parse_workflow(std::string_view text) {
    if (text == "full") return Workflow::Full;
    if (text == "ait") return Workflow::Ait;
    return std::nullopt;
}

void WindowSpec::validate() const {
    check_increasing(deltas, "window deltas");
    check_increasing(short_only, "short windows");
}

FeatureConfig FeatureConfig::full() { return FeatureConfig{}; }

FeatureConfig FeatureConfig::ait() {
    FeatureConfig config;
    config.workflow = Workflow::Ait;
    config.windows.deltas = {kDay};
    config.windows.short_only = {kDay};
    config.recency_cap = 7 * kDay;
    return config;
}

Duration FeatureConfig::required_retention() const {
    Duration longest = recency_cap;
    for (Duration d : windows.deltas) longest = std::max(longest, d);
    for (Duration d : windows.short_only) longest = std::max(longest, d);
    return longest;
}

std::vector<std::string> feature_names(const FeatureConfig& config) {
    config.windows.validate();
    std::vector<std::string> names;
    const auto& deltas = config.windows.deltas;
    const auto& shorts = config.windows.short_only;
    auto per = [&names](const std::vector<Duration>& windows, const std::string& stem) {
        for (Duration d : windows) names.push_back(stem + "_" + window_suffix(d));
    };
    if (config.workflow == Workflow::Full) {
        per(deltas, "entity_investigation_rate");
        per(deltas, "entity_malicious_rate");
        per(shorts, "entity_resolved_rate");
        per(deltas, "tenant_category_investigation_rate");
        per(deltas, "global_category_investigation_rate");
        per(deltas, "tenant_category_malicious_rate");
        per(deltas, "global_category_malicious_rate");
        per(shorts, "tenant_category_resolved_rate");
        per(shorts, "global_category_resolved_rate");
        per(shorts, "tenant_category_total");
        per(shorts, "global_category_total");
        names.emplace_back("delta_category_tenant");
        names.emplace_back("delta_category_entity");
        names.emplace_back("entity_count");
        names.emplace_back("entity_relationship_count");
        names.emplace_back("max_tactic_score");
        names.emplace_back("technique_count");
    } else {
        per(shorts, "entity_resolved_rate");
        per(deltas, "entity_malicious_rate");
        per(deltas, "tenant_category_malicious_rate");
        per(deltas, "global_category_malicious_rate");
        per(shorts, "tenant_category_resolved_rate");
        per(shorts, "global_category_resolved_rate");
        per(shorts, "tenant_category_total");
        per(shorts, "global_category_total");
        names.emplace_back("delta_category_tenant");
        names.emplace_back("delta_category_entity");
    }
    return names;
}

std::size_t baseline_slot(const FeatureConfig& config) {
    const auto names = feature_names(config);
    const std::string wanted = config.workflow == Workflow::Full
                                   ? "global_category_investigation_rate_" +
                                         window_suffix(config.windows.deltas.back())
                                   : "global_category_malicious_rate_" +
                                         window_suffix(config.windows.deltas.front());
    const auto it = std::find(names.begin(), names.end(), wanted);
    if (it == names.end()) throw std::logic_error("baseline slot missing from layout");
    return static_cast<std::size_t>(it - names.begin());
}

FeatureAssembler::FeatureAssembler(FeatureConfig config)
    : config_(std::move(config)), names_(feature_names(config_)) {}

FeatureVector FeatureAssembler::assemble(const ActionCountStore& store, const Alert& alert,
                                         Timestamp t) const {
    const auto view = store.snapshot();
    const auto& tenant = alert.tenant_id;
    const auto& category = alert.category.value;
    const std::span<const EntityRef> entities(alert.entities);
    const auto& deltas = config_.windows.deltas;
    const auto& shorts = config_.windows.short_only;
    const EntitySummary summary = config_.entity_summary;

    FeatureVector v;
    v.reserve(names_.size());
    auto entity_rates = [&](ActionSet set, const std::vector<Duration>& windows) {
        for (Duration d : windows) v.push_back(view.entity_rate(tenant, entities, set, t, d, summary));
    };
    auto entity_resolved = [&] {
        for (Duration d : shorts) v.push_back(view.entity_resolved_ratio(tenant, entities, t, d, summary));
    };
    auto category_rates = [&](Scope scope, ActionSet set, const std::vector<Duration>& windows) {
        for (Duration d : windows) v.push_back(view.category_rate(scope, tenant, category, set, t, d));
    };
    std::vector<ResolvedTotal> tenant_rt, global_rt;
    for (Duration d : shorts) {
        tenant_rt.push_back(view.resolved_and_total(Scope::TenantCategory, tenant, category, t, d));
        global_rt.push_back(view.resolved_and_total(Scope::GlobalCategory, tenant, category, t, d));
    }
    auto push_resolved = [&](const std::vector<ResolvedTotal>& rts) {
        for (const auto& rt : rts) v.push_back(rt.resolved_ratio);
    };
    auto push_totals = [&](const std::vector<ResolvedTotal>& rts) {
        for (const auto& rt : rts) v.push_back(rt.total);
    };
    const RecencyDeltas recency = view.recency_deltas(tenant, category, entities, t, config_.recency_cap);

    if (config_.workflow == Workflow::Full) {
        entity_rates(ActionSet::Investigation, deltas);
        entity_rates(ActionSet::MaliciousLabel, deltas);
        entity_resolved();
        category_rates(Scope::TenantCategory, ActionSet::Investigation, deltas);
        category_rates(Scope::GlobalCategory, ActionSet::Investigation, deltas);
        category_rates(Scope::TenantCategory, ActionSet::MaliciousLabel, deltas);
        category_rates(Scope::GlobalCategory, ActionSet::MaliciousLabel, deltas);
        push_resolved(tenant_rt);
        push_resolved(global_rt);
        push_totals(tenant_rt);
        push_totals(global_rt);
        v.push_back(recency.tenant);
        v.push_back(recency.entity);
        for (double s : extract_static_features(alert)) v.push_back(s);
    } else {
        entity_resolved();
        entity_rates(ActionSet::MaliciousLabel, deltas);
        category_rates(Scope::TenantCategory, ActionSet::MaliciousLabel, deltas);
        category_rates(Scope::GlobalCategory, ActionSet::MaliciousLabel, deltas);
        push_resolved(tenant_rt);
        push_resolved(global_rt);
        push_totals(tenant_rt);
        push_totals(global_rt);
        v.push_back(recency.tenant);
        v.push_back(recency.entity);
    }
    return v;
}

FeatureVector assemble_feature_vector(const ActionCountStore& store, const Alert& alert, Timestamp t,
                                      const FeatureConfig& config) {
    return FeatureAssembler(config).assemble(store, alert, t);
}

}  // namespace aact
