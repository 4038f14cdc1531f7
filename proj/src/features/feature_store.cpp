#include "aact/feature_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aact/errors.hpp"

namespace aact {

namespace {

constexpr std::uint8_t kInvestigated = 1u << 0;
constexpr std::uint8_t kNotInvestigated = 1u << 1;
constexpr std::uint8_t kMalicious = 1u << 2;
constexpr std::uint8_t kBenign = 1u << 3;

constexpr char kKeySeparator = '\x1f';
constexpr std::string_view kCheckpointMagic = "aact-store-checkpoint";
constexpr int kCheckpointVersion = 1;

// Scanning slack for the straddling-record correction. Timestamps near 2e9 s
// carry rounding error around 1e-7 s, far below this.
constexpr double kStraddleSlack = 1.0;

std::string make_key(Scope scope, std::string_view tenant, std::string_view category,
                     std::string_view entity) {
    std::string key;
    key.reserve(2 + tenant.size() + category.size() + entity.size() + 2);
    key.push_back(static_cast<char>('0' + static_cast<int>(scope)));
    key.append(tenant);
    key.push_back(kKeySeparator);
    key.append(category);
    key.push_back(kKeySeparator);
    key.append(entity);
    return key;
}

std::uint8_t flags_for(const ResolutionEvent& ev, ResolutionOrigin origin) {
    if (origin == ResolutionOrigin::Machine) return 0;
    std::uint8_t flags = ev.action == ActionKind::Investigated ? kInvestigated : kNotInvestigated;
    if (ev.label) flags |= *ev.label == LabelKind::Malicious ? kMalicious : kBenign;
    return flags;
}

ActionCounts counts_for(std::uint8_t flags) {
    ActionCounts c;
    c.investigated = (flags & kInvestigated) ? 1 : 0;
    c.not_investigated = (flags & kNotInvestigated) ? 1 : 0;
    c.malicious = (flags & kMalicious) ? 1 : 0;
    c.benign = (flags & kBenign) ? 1 : 0;
    c.resolved = 1;
    return c;
}

std::vector<std::string> unique_identifiers(std::span<const EntityRef> entities) {
    std::vector<std::string> ids;
    ids.reserve(entities.size());
    for (const auto& e : entities) ids.push_back(e.identifier);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

void write_double(std::ostream& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
}

double read_double(std::string_view text) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw CorruptCheckpoint("bad number: " + std::string(text));
    }
    return v;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && line[pos] == ' ') ++pos;
        const std::size_t start = pos;
        while (pos < line.size() && line[pos] != ' ') ++pos;
        if (pos > start) out.push_back(line.substr(start, pos - start));
    }
    return out;
}

}  // namespace

ActionCounts& ActionCounts::operator+=(const ActionCounts& o) {
    investigated += o.investigated;
    not_investigated += o.not_investigated;
    malicious += o.malicious;
    benign += o.benign;
    resolved += o.resolved;
    return *this;
}

ActionCounts& ActionCounts::operator-=(const ActionCounts& o) {
    investigated -= o.investigated;
    not_investigated -= o.not_investigated;
    malicious -= o.malicious;
    benign -= o.benign;
    resolved -= o.resolved;
    return *this;
}

double safe_ratio(std::int64_t num, std::int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double action_rate(const ActionCounts& counts, ActionSet set) {
    if (set == ActionSet::Investigation) {
        return safe_ratio(counts.investigated, counts.investigated + counts.not_investigated);
    }
    return safe_ratio(counts.malicious, counts.malicious + counts.benign);
}

struct ResolutionRecord {
    Timestamp created_at;
    Timestamp resolved_at;
    std::uint8_t flags;
};

// Resolutions of one key ordered by resolution time with running totals, so a
// window tally is two binary searches plus a short correction pass over the
// records that resolved inside the window but were created before it.
struct ActionCountStore::ResolutionSeries {
    std::vector<ResolutionRecord> records;
    std::vector<ActionCounts> prefix{ActionCounts{}};
    std::size_t head = 0;
    Duration max_delay = 0.0;

    void insert(const ResolutionRecord& rec) {
        auto it = std::upper_bound(records.begin() + static_cast<std::ptrdiff_t>(head), records.end(),
                                   rec.resolved_at, [](Timestamp t, const ResolutionRecord& r) {
                                       return t < r.resolved_at;
                                   });
        const auto idx = static_cast<std::size_t>(it - records.begin());
        records.insert(it, rec);
        prefix.resize(records.size() + 1);
        for (std::size_t i = idx; i < records.size(); ++i) {
            prefix[i + 1] = prefix[i];
            prefix[i + 1] += counts_for(records[i].flags);
        }
        max_delay = std::max(max_delay, rec.resolved_at - rec.created_at);
    }

    std::size_t lower_index(Timestamp t) const {
        auto it = std::lower_bound(records.begin() + static_cast<std::ptrdiff_t>(head), records.end(), t,
                                   [](const ResolutionRecord& r, Timestamp v) { return r.resolved_at < v; });
        return static_cast<std::size_t>(it - records.begin());
    }

    ActionCounts window(Timestamp t, Duration delta) const {
        const Timestamp start = t - delta;
        const std::size_t lo = lower_index(start);
        const std::size_t hi = lower_index(t);
        if (hi <= lo) return {};
        ActionCounts c = prefix[hi];
        c -= prefix[lo];
        const Timestamp straddle_limit = start + max_delay + kStraddleSlack;
        for (std::size_t i = lo; i < hi && records[i].resolved_at < straddle_limit; ++i) {
            if (records[i].created_at < start) c -= counts_for(records[i].flags);
        }
        return c;
    }

    void prune(Timestamp horizon) {
        while (head < records.size() && records[head].resolved_at < horizon) ++head;
        if (head > 256 && head * 2 > records.size()) {
            records.erase(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(head));
            head = 0;
            prefix.assign(records.size() + 1, ActionCounts{});
            for (std::size_t i = 0; i < records.size(); ++i) {
                prefix[i + 1] = prefix[i];
                prefix[i + 1] += counts_for(records[i].flags);
            }
        }
    }

    bool empty() const { return head == records.size(); }
};

struct ActionCountStore::SightingSeries {
    std::vector<Timestamp> times;
    std::size_t head = 0;

    void insert(Timestamp t) {
        if (times.empty() || times.back() <= t) {
            times.push_back(t);
        } else {
            times.insert(std::upper_bound(times.begin() + static_cast<std::ptrdiff_t>(head), times.end(), t), t);
        }
    }

    std::int64_t count(Timestamp lo, Timestamp hi) const {
        const auto begin = times.begin() + static_cast<std::ptrdiff_t>(head);
        const auto a = std::lower_bound(begin, times.end(), lo);
        const auto b = std::lower_bound(begin, times.end(), hi);
        return b > a ? static_cast<std::int64_t>(b - a) : 0;
    }

    std::optional<Timestamp> last_before(Timestamp t) const {
        const auto begin = times.begin() + static_cast<std::ptrdiff_t>(head);
        const auto it = std::lower_bound(begin, times.end(), t);
        if (it == begin) return std::nullopt;
        return *(it - 1);
    }

    void prune(Timestamp horizon) {
        while (head < times.size() && times[head] < horizon) ++head;
        if (head > 256 && head * 2 > times.size()) {
            times.erase(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(head));
            head = 0;
        }
    }

    bool empty() const { return head == times.size(); }
};

struct ActionCountStore::AlertInfo {
    std::string tenant;
    std::string category;
    std::vector<std::string> entities;
    Timestamp created_at = 0.0;
    std::optional<Timestamp> resolved_at;
};

struct ActionCountStore::Impl {
    mutable std::shared_mutex mutex;
    std::unordered_map<std::string, ResolutionSeries> resolutions;
    std::unordered_map<std::string, SightingSeries> sightings;
    std::unordered_map<std::string, AlertInfo> alerts;
    Timestamp watermark = -std::numeric_limits<double>::infinity();
    std::size_t events = 0;
    std::size_t since_compaction = 0;

    const ResolutionSeries* find_resolutions(const std::string& key) const {
        auto it = resolutions.find(key);
        return it == resolutions.end() ? nullptr : &it->second;
    }
    const SightingSeries* find_sightings(const std::string& key) const {
        auto it = sightings.find(key);
        return it == sightings.end() ? nullptr : &it->second;
    }

    ActionCounts counts(const std::string& key, Timestamp t, Duration delta) const {
        const ResolutionSeries* series = find_resolutions(key);
        return series ? series->window(t, delta) : ActionCounts{};
    }

    std::int64_t sighting_count(const std::string& key, Timestamp t, Duration delta) const {
        const SightingSeries* series = find_sightings(key);
        return series ? series->count(t - delta, t) : 0;
    }

    ResolvedTotal resolved_total(const std::string& key, Timestamp t, Duration delta) const {
        const std::int64_t total = sighting_count(key, t, delta);
        const ActionCounts c = counts(key, t, delta);
        return ResolvedTotal{static_cast<double>(total), safe_ratio(c.resolved, total)};
    }

    std::optional<Timestamp> last_before(const std::string& key, Timestamp t) const {
        const SightingSeries* series = find_sightings(key);
        return series ? series->last_before(t) : std::nullopt;
    }

    Timestamp horizon(const StoreConfig& config) const {
        if (!config.retention) return -std::numeric_limits<double>::infinity();
        return watermark - config.lateness - *config.retention;
    }
};

namespace {

double summarize(const std::vector<double>& values, EntitySummary summary) {
    if (values.empty()) return 0.0;
    if (summary == EntitySummary::Max) return *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

}  // namespace

ActionCountStore::ActionCountStore(StoreConfig config)
    : config_(config), impl_(std::make_unique<Impl>()) {}

ActionCountStore::ActionCountStore(ActionCountStore&&) noexcept = default;
ActionCountStore& ActionCountStore::operator=(ActionCountStore&&) noexcept = default;
ActionCountStore::~ActionCountStore() = default;

void ActionCountStore::record_alert_created(const Alert& alert) {
    std::unique_lock lock(impl_->mutex);
    if (alert.created_at < impl_->watermark - config_.lateness) {
        throw LatenessExceeded("alert " + alert.id + " is older than the lateness bound");
    }
    auto [it, inserted] = impl_->alerts.try_emplace(alert.id);
    if (!inserted) throw DuplicateAlert("alert " + alert.id + " already recorded");
    AlertInfo& info = it->second;
    info.tenant = alert.tenant_id;
    info.category = alert.category.value;
    info.entities = unique_identifiers(alert.entities);
    info.created_at = alert.created_at;

    const Timestamp t = alert.created_at;
    impl_->sightings[make_key(Scope::TenantCategory, info.tenant, info.category, {})].insert(t);
    impl_->sightings[make_key(Scope::GlobalCategory, {}, info.category, {})].insert(t);
    for (const auto& entity : info.entities) {
        impl_->sightings[make_key(Scope::TenantEntity, info.tenant, {}, entity)].insert(t);
        impl_->sightings[make_key(Scope::TenantCategoryEntity, info.tenant, info.category, entity)]
            .insert(t);
    }
    impl_->watermark = std::max(impl_->watermark, t);
    ++impl_->events;
    if (config_.retention && ++impl_->since_compaction >= config_.compaction_interval) {
        lock.unlock();
        compact();
    }
}

void ActionCountStore::record_resolution(const ResolutionEvent& event, ResolutionOrigin origin) {
    std::unique_lock lock(impl_->mutex);
    auto it = impl_->alerts.find(event.alert_id);
    if (it == impl_->alerts.end()) throw UnknownAlert("unknown alert " + event.alert_id);
    AlertInfo& info = it->second;
    if (info.resolved_at) throw DuplicateResolution("alert " + event.alert_id + " already resolved");
    if (event.resolved_at < info.created_at) {
        throw MalformedRecord("alert " + event.alert_id + " resolved before it was created");
    }
    if (event.resolved_at < impl_->watermark - config_.lateness) {
        throw LatenessExceeded("resolution of " + event.alert_id + " is older than the lateness bound");
    }
    info.resolved_at = event.resolved_at;
    const ResolutionRecord rec{info.created_at, event.resolved_at, flags_for(event, origin)};
    impl_->resolutions[make_key(Scope::TenantCategory, info.tenant, info.category, {})].insert(rec);
    impl_->resolutions[make_key(Scope::GlobalCategory, {}, info.category, {})].insert(rec);
    for (const auto& entity : info.entities) {
        impl_->resolutions[make_key(Scope::TenantEntity, info.tenant, {}, entity)].insert(rec);
    }
    impl_->watermark = std::max(impl_->watermark, event.resolved_at);
    ++impl_->events;
    if (config_.retention && ++impl_->since_compaction >= config_.compaction_interval) {
        lock.unlock();
        compact();
    }
}

double ActionCountStore::category_rate(Scope scope, std::string_view tenant, std::string_view category,
                                       ActionSet set, Timestamp t, Duration delta) const {
    return snapshot().category_rate(scope, tenant, category, set, t, delta);
}

double ActionCountStore::entity_rate(std::string_view tenant, std::span<const EntityRef> entities,
                                     ActionSet set, Timestamp t, Duration delta,
                                     EntitySummary summary) const {
    return snapshot().entity_rate(tenant, entities, set, t, delta, summary);
}

ResolvedTotal ActionCountStore::resolved_and_total(Scope scope, std::string_view tenant,
                                                   std::string_view category, Timestamp t,
                                                   Duration delta) const {
    return snapshot().resolved_and_total(scope, tenant, category, t, delta);
}

double ActionCountStore::entity_resolved_ratio(std::string_view tenant,
                                               std::span<const EntityRef> entities, Timestamp t,
                                               Duration delta, EntitySummary summary) const {
    return snapshot().entity_resolved_ratio(tenant, entities, t, delta, summary);
}

RecencyDeltas ActionCountStore::recency_deltas(std::string_view tenant, std::string_view category,
                                               std::span<const EntityRef> entities, Timestamp t,
                                               Duration cap) const {
    return snapshot().recency_deltas(tenant, category, entities, t, cap);
}

ActionCounts ActionCountStore::window_counts(Scope scope, std::string_view tenant, std::string_view key,
                                             Timestamp t, Duration delta) const {
    return snapshot().window_counts(scope, tenant, key, t, delta);
}

std::optional<Timestamp> ActionCountStore::last_seen(Scope scope, std::string_view tenant,
                                                     std::string_view category, std::string_view entity,
                                                     Timestamp t) const {
    return snapshot().last_seen(scope, tenant, category, entity, t);
}

Timestamp ActionCountStore::watermark() const {
    return snapshot().watermark();
}

ActionCountStore::Snapshot ActionCountStore::snapshot() const {
    return Snapshot(*impl_);
}

ActionCountStore::Snapshot::Snapshot(const Impl& impl) : impl_(&impl), lock_(impl.mutex) {}

double ActionCountStore::Snapshot::category_rate(Scope scope, std::string_view tenant, std::string_view category,
                                       ActionSet set, Timestamp t, Duration delta) const {
    const std::string key = scope == Scope::GlobalCategory
                                ? make_key(Scope::GlobalCategory, {}, category, {})
                                : make_key(Scope::TenantCategory, tenant, category, {});
    return action_rate(impl_->counts(key, t, delta), set);
}

double ActionCountStore::Snapshot::entity_rate(std::string_view tenant, std::span<const EntityRef> entities,
                                     ActionSet set, Timestamp t, Duration delta,
                                     EntitySummary summary) const {
    std::vector<double> rates;
    for (const auto& id : unique_identifiers(entities)) {
        rates.push_back(action_rate(impl_->counts(make_key(Scope::TenantEntity, tenant, {}, id), t, delta), set));
    }
    return summarize(rates, summary);
}

ResolvedTotal ActionCountStore::Snapshot::resolved_and_total(Scope scope, std::string_view tenant,
                                                   std::string_view category, Timestamp t,
                                                   Duration delta) const {
    const std::string key = scope == Scope::GlobalCategory
                                ? make_key(Scope::GlobalCategory, {}, category, {})
                                : make_key(Scope::TenantCategory, tenant, category, {});
    return impl_->resolved_total(key, t, delta);
}

double ActionCountStore::Snapshot::entity_resolved_ratio(std::string_view tenant,
                                               std::span<const EntityRef> entities, Timestamp t,
                                               Duration delta, EntitySummary summary) const {
    std::vector<double> ratios;
    for (const auto& id : unique_identifiers(entities)) {
        ratios.push_back(
            impl_->resolved_total(make_key(Scope::TenantEntity, tenant, {}, id), t, delta).resolved_ratio);
    }
    return summarize(ratios, summary);
}

RecencyDeltas ActionCountStore::Snapshot::recency_deltas(std::string_view tenant, std::string_view category,
                                               std::span<const EntityRef> entities, Timestamp t,
                                               Duration cap) const {
    auto delta_for = [&](const std::string& key) {
        const auto last = impl_->last_before(key, t);
        return last ? std::min(t - *last, cap) : cap;
    };
    RecencyDeltas out;
    out.tenant = delta_for(make_key(Scope::TenantCategory, tenant, category, {}));
    const auto ids = unique_identifiers(entities);
    if (ids.empty()) {
        out.entity = cap;
    } else {
        out.entity = 0.0;
        for (const auto& id : ids) {
            out.entity = std::max(out.entity, delta_for(make_key(Scope::TenantCategoryEntity, tenant, category, id)));
        }
    }
    return out;
}

ActionCounts ActionCountStore::Snapshot::window_counts(Scope scope, std::string_view tenant, std::string_view key,
                                             Timestamp t, Duration delta) const {
    switch (scope) {
        case Scope::TenantCategory:
            return impl_->counts(make_key(scope, tenant, key, {}), t, delta);
        case Scope::GlobalCategory:
            return impl_->counts(make_key(scope, {}, key, {}), t, delta);
        case Scope::TenantEntity:
            return impl_->counts(make_key(scope, tenant, {}, key), t, delta);
        case Scope::TenantCategoryEntity:
            break;
    }
    return {};
}

std::optional<Timestamp> ActionCountStore::Snapshot::last_seen(Scope scope, std::string_view tenant,
                                                     std::string_view category, std::string_view entity,
                                                     Timestamp t) const {
    switch (scope) {
        case Scope::TenantCategory:
            return impl_->last_before(make_key(scope, tenant, category, {}), t);
        case Scope::GlobalCategory:
            return impl_->last_before(make_key(scope, {}, category, {}), t);
        case Scope::TenantEntity:
            return impl_->last_before(make_key(scope, tenant, {}, entity), t);
        case Scope::TenantCategoryEntity:
            return impl_->last_before(make_key(scope, tenant, category, entity), t);
    }
    return std::nullopt;
}

Timestamp ActionCountStore::Snapshot::watermark() const {
    return impl_->watermark;
}

bool ActionCountStore::knows_alert(std::string_view alert_id) const {
    std::shared_lock lock(impl_->mutex);
    return impl_->alerts.count(std::string(alert_id)) > 0;
}

bool ActionCountStore::is_resolved(std::string_view alert_id) const {
    std::shared_lock lock(impl_->mutex);
    auto it = impl_->alerts.find(std::string(alert_id));
    return it != impl_->alerts.end() && it->second.resolved_at.has_value();
}

std::size_t ActionCountStore::event_count() const {
    std::shared_lock lock(impl_->mutex);
    return impl_->events;
}

void ActionCountStore::compact() {
    std::unique_lock lock(impl_->mutex);
    impl_->since_compaction = 0;
    if (!config_.retention) return;
    const Timestamp horizon = impl_->horizon(config_);
    for (auto it = impl_->resolutions.begin(); it != impl_->resolutions.end();) {
        it->second.prune(horizon);
        it = it->second.empty() ? impl_->resolutions.erase(it) : std::next(it);
    }
    for (auto it = impl_->sightings.begin(); it != impl_->sightings.end();) {
        it->second.prune(horizon);
        it = it->second.empty() ? impl_->sightings.erase(it) : std::next(it);
    }
    for (auto it = impl_->alerts.begin(); it != impl_->alerts.end();) {
        const bool expired = it->second.resolved_at && *it->second.resolved_at < horizon;
        it = expired ? impl_->alerts.erase(it) : std::next(it);
    }
}

void ActionCountStore::save_checkpoint(std::ostream& out) const {
    using nlohmann::json;
    std::shared_lock lock(impl_->mutex);
    const Timestamp horizon = impl_->horizon(config_);

    out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    out << "lateness ";
    write_double(out, config_.lateness);
    out << "\nretention ";
    if (config_.retention) {
        write_double(out, *config_.retention);
    } else {
        out << "none";
    }
    out << "\ncompaction_interval " << config_.compaction_interval << '\n';
    out << "watermark ";
    write_double(out, impl_->watermark);
    out << "\nevents " << impl_->events << '\n';

    std::vector<const std::pair<const std::string, AlertInfo>*> alerts;
    for (const auto& entry : impl_->alerts) {
        if (entry.second.resolved_at && *entry.second.resolved_at < horizon) continue;
        alerts.push_back(&entry);
    }
    std::sort(alerts.begin(), alerts.end(), [](auto* a, auto* b) { return a->first < b->first; });
    out << "alerts " << alerts.size() << '\n';
    for (const auto* entry : alerts) {
        const AlertInfo& info = entry->second;
        json row = json::array({entry->first, info.tenant, info.category, info.created_at,
                                info.resolved_at ? json(*info.resolved_at) : json(nullptr),
                                info.entities});
        out << row.dump() << '\n';
    }

    std::map<std::string, std::vector<ResolutionRecord>> series;
    for (const auto& [key, s] : impl_->resolutions) {
        std::vector<ResolutionRecord> live;
        for (std::size_t i = s.head; i < s.records.size(); ++i) {
            if (s.records[i].resolved_at >= horizon) live.push_back(s.records[i]);
        }
        if (live.empty()) continue;
        std::sort(live.begin(), live.end(), [](const ResolutionRecord& a, const ResolutionRecord& b) {
            return std::tie(a.resolved_at, a.created_at, a.flags) <
                   std::tie(b.resolved_at, b.created_at, b.flags);
        });
        series.emplace(key, std::move(live));
    }
    out << "resolutions " << series.size() << '\n';
    for (const auto& [key, records] : series) {
        out << json::array({key, records.size()}).dump() << '\n';
        for (const auto& r : records) {
            write_double(out, r.created_at);
            out << ' ';
            write_double(out, r.resolved_at);
            out << ' ' << static_cast<int>(r.flags) << '\n';
        }
    }

    std::map<std::string, std::vector<Timestamp>> seen;
    for (const auto& [key, s] : impl_->sightings) {
        std::vector<Timestamp> live;
        for (std::size_t i = s.head; i < s.times.size(); ++i) {
            if (s.times[i] >= horizon) live.push_back(s.times[i]);
        }
        if (!live.empty()) seen.emplace(key, std::move(live));
    }
    out << "sightings " << seen.size() << '\n';
    for (const auto& [key, times] : seen) {
        out << json::array({key, times.size()}).dump() << '\n';
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (i) out << ' ';
            write_double(out, times[i]);
        }
        out << '\n';
    }
    out << "end\n";
}

ActionCountStore ActionCountStore::load_checkpoint(std::istream& in) {
    using nlohmann::json;
    std::string line;
    auto next_line = [&]() -> std::string& {
        if (!std::getline(in, line)) throw CorruptCheckpoint("truncated checkpoint");
        return line;
    };
    auto expect_field = [&](std::string_view name) -> std::string {
        std::string& l = next_line();
        if (l.rfind(std::string(name) + " ", 0) != 0) {
            throw CorruptCheckpoint("expected " + std::string(name) + ", got: " + l);
        }
        return l.substr(name.size() + 1);
    };
    auto to_size = [](const std::string& s) {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) throw CorruptCheckpoint("bad count: " + s);
        return v;
    };
    auto parse_json = [](const std::string& s) {
        try {
            return json::parse(s);
        } catch (const json::exception& e) {
            throw CorruptCheckpoint(e.what());
        }
    };

    const std::string version = expect_field(kCheckpointMagic);
    if (version != std::to_string(kCheckpointVersion)) {
        throw VersionMismatch("unsupported checkpoint version " + version);
    }
    StoreConfig config;
    config.lateness = read_double(expect_field("lateness"));
    const std::string retention = expect_field("retention");
    if (retention != "none") config.retention = read_double(retention);
    config.compaction_interval = to_size(expect_field("compaction_interval"));
    ActionCountStore store(config);
    Impl& impl = *store.impl_;
    impl.watermark = read_double(expect_field("watermark"));
    impl.events = to_size(expect_field("events"));

    try {
        const std::size_t n_alerts = to_size(expect_field("alerts"));
        impl.alerts.reserve(n_alerts);
        for (std::size_t i = 0; i < n_alerts; ++i) {
            const json row = parse_json(next_line());
            AlertInfo info;
            info.tenant = row.at(1).get<std::string>();
            info.category = row.at(2).get<std::string>();
            info.created_at = row.at(3).get<double>();
            if (!row.at(4).is_null()) info.resolved_at = row.at(4).get<double>();
            info.entities = row.at(5).get<std::vector<std::string>>();
            impl.alerts.emplace(row.at(0).get<std::string>(), std::move(info));
        }
        const std::size_t n_series = to_size(expect_field("resolutions"));
        for (std::size_t i = 0; i < n_series; ++i) {
            const json header = parse_json(next_line());
            ResolutionSeries& s = impl.resolutions[header.at(0).get<std::string>()];
            const auto n = header.at(1).get<std::size_t>();
            for (std::size_t j = 0; j < n; ++j) {
                const auto parts = split_spaces(next_line());
                if (parts.size() != 3) throw CorruptCheckpoint("bad resolution record");
                const auto flags = to_size(std::string(parts[2]));
                if (flags > 0xF) throw CorruptCheckpoint("bad resolution flags");
                s.insert(ResolutionRecord{read_double(parts[0]), read_double(parts[1]),
                                          static_cast<std::uint8_t>(flags)});
            }
        }
        const std::size_t n_sightings = to_size(expect_field("sightings"));
        for (std::size_t i = 0; i < n_sightings; ++i) {
            const json header = parse_json(next_line());
            SightingSeries& s = impl.sightings[header.at(0).get<std::string>()];
            const auto n = header.at(1).get<std::size_t>();
            const auto parts = split_spaces(next_line());
            if (parts.size() != n) throw CorruptCheckpoint("sighting count mismatch");
            s.times.reserve(n);
            for (auto p : parts) s.insert(read_double(p));
        }
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(e.what());
    }
    if (next_line() != "end") throw CorruptCheckpoint("missing end marker");
    return store;
}

}  // namespace aact
