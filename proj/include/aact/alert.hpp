#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aact {

/// Event time in seconds since the Unix epoch. All windows are keyed on the
/// timestamps carried by the data, never on wall-clock time.
using Timestamp = double;
/// Length of an event-time interval in seconds.
using Duration = double;

inline constexpr Duration kMinute = 60.0;
inline constexpr Duration kHour = 3600.0;
inline constexpr Duration kDay = 86400.0;

enum class ActionKind : std::uint8_t { Investigated, NotInvestigated };
enum class LabelKind : std::uint8_t { Malicious, Benign };

std::string_view to_string(ActionKind action);
std::string_view to_string(LabelKind label);
std::optional<ActionKind> parse_action(std::string_view text);
std::optional<LabelKind> parse_label(std::string_view text);

struct EntityRef {
    std::string identifier;
    std::optional<std::string> kind;

    friend bool operator==(const EntityRef&, const EntityRef&) = default;
};

/// A terminal analyst (or machine) action on an alert.
struct ResolutionEvent {
    std::string alert_id;
    ActionKind action = ActionKind::NotInvestigated;
    std::optional<LabelKind> label;
    Timestamp resolved_at = 0.0;
    std::optional<std::string> analyst_id;

    friend bool operator==(const ResolutionEvent&, const ResolutionEvent&) = default;
};

enum class CategorySource : std::uint8_t { DetectorRule, NormalizedTitle };

struct CategoryId {
    std::string value;
    CategorySource source = CategorySource::NormalizedTitle;

    friend bool operator==(const CategoryId&, const CategoryId&) = default;
};

struct Alert {
    std::string id;
    std::string tenant_id;
    Timestamp created_at = 0.0;
    std::string title;
    std::optional<std::string> detector;
    std::optional<std::string> rule;
    std::optional<double> severity;
    std::vector<EntityRef> entities;
    std::int64_t entity_relationship_count = 0;
    std::vector<std::string> mitre_techniques;
    int mitre_tactic_max = 0;  // 0 means no tactic present
    CategoryId category;
    std::optional<ResolutionEvent> resolution;
};

/// entity count, entity relationship count, max tactic ordinal, technique count
using StaticFeatures = std::array<double, 4>;

inline constexpr int kMaxTacticOrdinal = 14;

/// Kill-chain ordinal of a MITRE ATT&CK Enterprise tactic, accepting either the
/// tactic id ("TA0002") or its name ("Execution", "privilege-escalation").
/// Reconnaissance is 1 and Impact is 14; anything unrecognised maps to 0.
int tactic_ordinal(std::string_view tactic);

/// Lowercases a title and replaces embedded entities (emails, IP literals,
/// UUIDs, hex hashes, domain names, file-system paths) with "<entity>".
std::string strip_entities(std::string_view title);

inline constexpr std::string_view kEntityPlaceholder = "<entity>";

/// Detector and rule joined by "::" when both are present, otherwise the
/// title with entities stripped. Throws EmptyCategory if both are empty.
CategoryId categorize(const Alert& alert);

/// Stamps alert.category in place and returns a reference to it.
const CategoryId& assign_category(Alert& alert);

StaticFeatures extract_static_features(const Alert& alert);

}  // namespace aact
