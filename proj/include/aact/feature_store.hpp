#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aact/alert.hpp"

namespace aact {

enum class Scope : std::uint8_t { TenantCategory, GlobalCategory, TenantEntity, TenantCategoryEntity };

/// Which pair of actions a rate is computed over: investigated vs not, or
/// malicious vs benign label. Each set yields one rate since the two
/// complementary rates are perfectly correlated.
enum class ActionSet : std::uint8_t { Investigation, MaliciousLabel };

/// Who closed the alert. Machine closures count towards resolved ratios but
/// never towards the action rates.
enum class ResolutionOrigin : std::uint8_t { Human, Machine };

enum class EntitySummary : std::uint8_t { Max, Mean };

struct StoreConfig {
    /// Events older than watermark - lateness are rejected.
    Duration lateness = kHour;
    /// When set, per-key history older than watermark - lateness - retention
    /// is discarded. Must cover the largest lookback window and the recency cap.
    std::optional<Duration> retention;
    /// Ingestions between automatic compactions when retention is set.
    std::size_t compaction_interval = 4096;
};

/// Per-window tallies for one key.
struct ActionCounts {
    std::int64_t investigated = 0;
    std::int64_t not_investigated = 0;
    std::int64_t malicious = 0;
    std::int64_t benign = 0;
    /// Human and machine resolutions alike.
    std::int64_t resolved = 0;

    ActionCounts& operator+=(const ActionCounts& o);
    ActionCounts& operator-=(const ActionCounts& o);
    friend bool operator==(const ActionCounts&, const ActionCounts&) = default;
};

/// Ratio with the zero-denominator convention: 0/0 is 0.
double safe_ratio(std::int64_t num, std::int64_t den);

double action_rate(const ActionCounts& counts, ActionSet set);

struct ResolvedTotal {
    double total = 0.0;
    double resolved_ratio = 0.0;
    friend bool operator==(const ResolvedTotal&, const ResolvedTotal&) = default;
};

struct RecencyDeltas {
    double tenant = 0.0;
    double entity = 0.0;
    friend bool operator==(const RecencyDeltas&, const RecencyDeltas&) = default;
};

/// Event-time store of alert sightings and resolutions.
///
/// Every query at time t only looks at events strictly before t: a sighting
/// counts when created_at < t, a resolution counts towards the window
/// [t - delta, t) when both its creation and resolution fall inside it. The
/// answers are therefore independent of anything ingested at or after t.
///
/// Writers are serialized internally; readers run concurrently and see a
/// consistent snapshot.
class ActionCountStore {
public:
    explicit ActionCountStore(StoreConfig config = {});

    ActionCountStore(const ActionCountStore&) = delete;
    ActionCountStore& operator=(const ActionCountStore&) = delete;
    ActionCountStore(ActionCountStore&&) noexcept;
    ActionCountStore& operator=(ActionCountStore&&) noexcept;
    ~ActionCountStore();

    /// Throws LatenessExceeded, or DuplicateAlert if the id was seen.
    void record_alert_created(const Alert& alert);

    /// Throws UnknownAlert, DuplicateResolution, LatenessExceeded, or
    /// MalformedRecord if the event predates the alert.
    void record_resolution(const ResolutionEvent& event,
                           ResolutionOrigin origin = ResolutionOrigin::Human);

    double category_rate(Scope scope, std::string_view tenant, std::string_view category,
                         ActionSet set, Timestamp t, Duration delta) const;

    double entity_rate(std::string_view tenant, std::span<const EntityRef> entities, ActionSet set,
                       Timestamp t, Duration delta,
                       EntitySummary summary = EntitySummary::Max) const;

    /// Alerts of the key created in [t - delta, t) and the fraction of them
    /// resolved before t.
    ResolvedTotal resolved_and_total(Scope scope, std::string_view tenant,
                                     std::string_view category, Timestamp t, Duration delta) const;

    /// Resolved ratio summarised over the alert's entities.
    double entity_resolved_ratio(std::string_view tenant, std::span<const EntityRef> entities,
                                 Timestamp t, Duration delta,
                                 EntitySummary summary = EntitySummary::Max) const;

    /// Seconds since the category was last seen for the tenant and, maximised
    /// over the entities, for each entity. Empty history yields `cap`.
    RecencyDeltas recency_deltas(std::string_view tenant, std::string_view category,
                                 std::span<const EntityRef> entities, Timestamp t,
                                 Duration cap) const;

    /// Raw window tallies for a key; mostly useful for diagnostics and tests.
    ActionCounts window_counts(Scope scope, std::string_view tenant, std::string_view key,
                               Timestamp t, Duration delta) const;

    std::optional<Timestamp> last_seen(Scope scope, std::string_view tenant,
                                       std::string_view category, std::string_view entity,
                                       Timestamp t) const;

    Timestamp watermark() const;
    bool knows_alert(std::string_view alert_id) const;
    bool is_resolved(std::string_view alert_id) const;
    std::size_t event_count() const;
    const StoreConfig& config() const noexcept { return config_; }

    /// Drops history that no query at t >= watermark - lateness can reach.
    void compact();

    /// Canonical snapshot: identical logical state gives identical bytes.
    void save_checkpoint(std::ostream& out) const;
    static ActionCountStore load_checkpoint(std::istream& in);

    /// Holds the reader lock across several queries so they all observe the
    /// same state. Writers block until every snapshot is released.
    class Snapshot;
    Snapshot snapshot() const;

private:
    struct ResolutionSeries;
    struct SightingSeries;
    struct AlertInfo;
    struct Impl;

    StoreConfig config_;
    std::unique_ptr<Impl> impl_;
};

class ActionCountStore::Snapshot {
public:
    double category_rate(Scope scope, std::string_view tenant, std::string_view category,
                         ActionSet set, Timestamp t, Duration delta) const;
    double entity_rate(std::string_view tenant, std::span<const EntityRef> entities, ActionSet set,
                       Timestamp t, Duration delta, EntitySummary summary = EntitySummary::Max) const;
    ResolvedTotal resolved_and_total(Scope scope, std::string_view tenant,
                                     std::string_view category, Timestamp t, Duration delta) const;
    double entity_resolved_ratio(std::string_view tenant, std::span<const EntityRef> entities,
                                 Timestamp t, Duration delta,
                                 EntitySummary summary = EntitySummary::Max) const;
    RecencyDeltas recency_deltas(std::string_view tenant, std::string_view category,
                                 std::span<const EntityRef> entities, Timestamp t,
                                 Duration cap) const;
    ActionCounts window_counts(Scope scope, std::string_view tenant, std::string_view key,
                               Timestamp t, Duration delta) const;
    std::optional<Timestamp> last_seen(Scope scope, std::string_view tenant,
                                       std::string_view category, std::string_view entity,
                                       Timestamp t) const;
    Timestamp watermark() const;

private:
    friend class ActionCountStore;
    explicit Snapshot(const Impl& impl);

    const Impl* impl_;
    std::shared_lock<std::shared_mutex> lock_;
};

}  // namespace aact
