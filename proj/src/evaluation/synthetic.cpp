#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "aact/pipeline.hpp"
#include "aact/random.hpp"

namespace aact {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

// Standard normal by Box-Muller on the portable uniform.
double normal(std::mt19937_64& rng) {
    const double u1 = 1.0 - unit_uniform(rng);
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

}  // namespace

std::vector<Alert> synthesize_soc_alerts(const SyntheticSocOptions& o) {
    if (o.tenants < 1 || o.categories < 1 || o.entities_per_tenant < 1 || !(o.span > 0) ||
        !(o.alerts_per_day > 0) || !(o.triage_max >= o.triage_min) || !(o.triage_min >= 0)) {
        throw std::invalid_argument("invalid synthetic workload shape");
    }
    std::mt19937_64 rng(o.seed);
    const Timestamp start = 1700000000.0;
    const auto C = static_cast<std::size_t>(o.categories);

    struct Category {
        std::string detector, rule, title;
        double logit_base;
        double weight;
        int tactic;
        std::vector<std::string> techniques;
    };
    std::vector<Category> categories(C);
    static const char* kTactics[] = {"TA0001", "TA0002", "TA0003", "TA0004", "TA0005", "TA0006", "TA0007",
                                     "TA0008", "TA0009", "TA0010", "TA0011", "TA0040", "TA0043", "TA0042"};
    double weight_total = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        auto& cat = categories[c];
        // Most categories are rarely escalated; a few usually are.
        const double u = unit_uniform(rng);
        cat.logit_base = logit(0.02 + 0.9 * u * u * u);
        cat.weight = 1.0 / (1.0 + static_cast<double>(c % 13));
        weight_total += cat.weight;
        cat.tactic = static_cast<int>(uniform_index(rng, 14));
        const auto techniques = uniform_index(rng, 4);
        for (std::uint64_t k = 0; k < techniques; ++k) cat.techniques.push_back("T" + std::to_string(1000 + c * 7 + k));
        if (c % 5 == 4) {
            cat.title = "Outbound connection from {host} to 10.0." + std::to_string(c) + ".{n} blocked (rule " +
                        std::to_string(c) + ")";
        } else {
            cat.detector = c % 2 ? "edr" : "ndr";
            cat.rule = "rule-" + std::to_string(100 + c);
            cat.title = "Detection " + std::to_string(c) + " on {host}";
        }
    }

    struct Entity {
        std::string id;
        std::string kind;
        double offset;
    };
    std::vector<std::vector<Entity>> entities(static_cast<std::size_t>(o.tenants));
    std::vector<std::vector<double>> tenant_offset(static_cast<std::size_t>(o.tenants), std::vector<double>(C));
    for (int t = 0; t < o.tenants; ++t) {
        auto& pool = entities[static_cast<std::size_t>(t)];
        for (int e = 0; e < o.entities_per_tenant; ++e) {
            const bool user = e % 4 == 3;
            // Roughly one entity in ten is compromised and drags its alerts up.
            const double offset = unit_uniform(rng) < 0.1 ? 2.5 : 0.0;
            pool.push_back({(user ? "user" : "host") + std::to_string(t) + "-" + std::to_string(e), user ? "user" : "host",
                            offset});
        }
        for (auto& v : tenant_offset[static_cast<std::size_t>(t)]) v = 0.8 * normal(rng);
    }

    auto pick_category = [&] {
        double u = unit_uniform(rng) * weight_total;
        for (std::size_t c = 0; c < C; ++c) {
            u -= categories[c].weight;
            if (u < 0) return c;
        }
        return C - 1;
    };
    auto fill = [](std::string text, const std::string& host, std::uint64_t n) {
        auto replace = [&text](const std::string& key, const std::string& value) {
            const auto pos = text.find(key);
            if (pos != std::string::npos) text.replace(pos, key.size(), value);
        };
        replace("{host}", host);
        replace("{n}", std::to_string(n));
        return text;
    };

    const auto total = static_cast<std::size_t>(o.alerts_per_day * o.span / kDay);
    std::vector<Timestamp> times(total);
    for (auto& t : times) t = start + unit_uniform(rng) * o.span;
    std::sort(times.begin(), times.end());

    std::vector<Alert> alerts;
    alerts.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        Alert a;
        a.id = "syn-" + std::to_string(i);
        const auto tenant = uniform_index(rng, static_cast<std::uint64_t>(o.tenants));
        a.tenant_id = "tenant-" + std::to_string(tenant);
        a.created_at = times[i];
        const std::size_t c = pick_category();
        const Category& cat = categories[c];
        const auto& pool = entities[tenant];
        const auto n_entities = uniform_index(rng, 4);
        double z = cat.logit_base + tenant_offset[tenant][c];
        double entity_push = 0.0;
        for (std::uint64_t k = 0; k < n_entities; ++k) {
            const Entity& e = pool[uniform_index(rng, pool.size())];
            a.entities.push_back({e.id, e.kind});
            entity_push = std::max(entity_push, e.offset);
        }
        z += entity_push;
        if (cat.detector.size()) a.detector = cat.detector;
        if (cat.rule.size()) a.rule = cat.rule;
        a.title = fill(cat.title, a.entities.empty() ? "unknown" : a.entities.front().identifier, uniform_index(rng, 250));
        a.severity = std::round(unit_uniform(rng) * 100.0) / 100.0;
        a.entity_relationship_count =
            a.entities.size() > 1 ? static_cast<std::int64_t>(uniform_index(rng, a.entities.size() * 2)) : 0;
        a.mitre_techniques = cat.techniques;
        a.mitre_tactic_max = tactic_ordinal(kTactics[cat.tactic]);
        z += 0.15 * (a.mitre_tactic_max - 7);
        assign_category(a);

        const bool investigated = unit_uniform(rng) < 1.0 / (1.0 + std::exp(-z));
        ResolutionEvent r;
        r.alert_id = a.id;
        r.action = investigated ? ActionKind::Investigated : ActionKind::NotInvestigated;
        r.label = investigated && unit_uniform(rng) < 0.8 ? LabelKind::Malicious : LabelKind::Benign;
        r.resolved_at = a.created_at + uniform_real(rng, o.triage_min, o.triage_max);
        r.analyst_id = "analyst-" + std::to_string(uniform_index(rng, 5));
        a.resolution = std::move(r);
        alerts.push_back(std::move(a));
    }
    return alerts;
}

}  // namespace aact
