#include <algorithm>
#include <array>
#include <cctype>
#include <regex>
#include <string>

#include "aact/alert.hpp"
#include "aact/errors.hpp"

namespace aact {

namespace {

// Entity patterns, applied in this order. The order matters: an email contains
// a domain and a path may contain an address, so the more specific shapes run
// first. Character classes exclude '<' and '>' so the placeholder itself never
// matches. Entity-pattern set version 1.
struct EntityPattern {
    const char* name;
    const char* expression;
};

constexpr std::array kEntityPatterns{
    EntityPattern{"email", R"([a-z0-9._%+\-]+@[a-z0-9\-]+(?:\.[a-z0-9\-]+)*)"},
    EntityPattern{"ipv4", R"(\b(?:\d{1,3}\.){3}\d{1,3}(?::\d{1,5})?\b)"},
    EntityPattern{"ipv6",
                  R"((?:\b[0-9a-f]{1,4}:){7}[0-9a-f]{1,4}\b|)"
                  R"((?:\b[0-9a-f]{1,4}:)+:(?:[0-9a-f]{1,4}\b(?::[0-9a-f]{1,4}\b)*)?|)"
                  R"(::[0-9a-f]{1,4}\b(?::[0-9a-f]{1,4}\b)*)"},
    EntityPattern{"uuid",
                  R"(\b[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}\b)"},
    EntityPattern{"hash", R"(\b(?:[0-9a-f]{64}|[0-9a-f]{40}|[0-9a-f]{32})\b)"},
    EntityPattern{"domain", R"(\b(?:[a-z0-9](?:[a-z0-9\-]*[a-z0-9])?\.)+[a-z]{2,}\b)"},
    // Windows drive or UNC paths first, then Unix paths. A path segment may
    // already hold a placeholder left by the domain rule ("c:\\x\\evil.exe").
    EntityPattern{"path",
                  R"([a-z]:\\(?:[^\s<>]|<entity>)*|\\\\(?:[^\s<>]|<entity>)+|)"
                  R"((?:/(?:[^\s/<>]|<entity>)+)+/?)"},
};

const std::vector<std::regex>& compiled_patterns() {
    static const std::vector<std::regex> patterns = [] {
        std::vector<std::regex> out;
        out.reserve(kEntityPatterns.size());
        for (const auto& p : kEntityPatterns) {
            out.emplace_back(p.expression, std::regex::ECMAScript | std::regex::optimize);
        }
        return out;
    }();
    return patterns;
}

std::string collapse_whitespace(const std::string& in) {
    std::string out;
    out.reserve(in.size());
    bool pending_space = false;
    for (char ch : in) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(ch);
    }
    return out;
}

std::string apply_patterns_once(std::string text) {
    const std::string placeholder(kEntityPlaceholder);
    for (const auto& re : compiled_patterns()) {
        text = std::regex_replace(text, re, placeholder);
    }
    return text;
}

std::string normalize_tactic_name(std::string_view text) {
    std::string out;
    for (char ch : text) {
        const auto uc = static_cast<unsigned char>(ch);
        if (std::isalnum(uc)) out.push_back(static_cast<char>(std::tolower(uc)));
    }
    return out;
}

}  // namespace

std::string strip_entities(std::string_view title) {
    std::string text(title);
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    // A replacement can expose a new match (e.g. a path around an address), so
    // iterate to the fixed point. Each pass strictly shrinks or leaves the text.
    for (int pass = 0; pass < 8; ++pass) {
        std::string next = collapse_whitespace(apply_patterns_once(text));
        if (next == text) break;
        text = std::move(next);
    }
    return collapse_whitespace(text);
}

int tactic_ordinal(std::string_view tactic) {
    struct Tactic {
        const char* id;
        const char* name;
    };
    // Enterprise tactics in kill-chain order.
    static constexpr std::array<Tactic, kMaxTacticOrdinal> kTactics{{
        {"ta0043", "reconnaissance"},
        {"ta0042", "resourcedevelopment"},
        {"ta0001", "initialaccess"},
        {"ta0002", "execution"},
        {"ta0003", "persistence"},
        {"ta0004", "privilegeescalation"},
        {"ta0005", "defenseevasion"},
        {"ta0006", "credentialaccess"},
        {"ta0007", "discovery"},
        {"ta0008", "lateralmovement"},
        {"ta0009", "collection"},
        {"ta0011", "commandandcontrol"},
        {"ta0010", "exfiltration"},
        {"ta0040", "impact"},
    }};
    const std::string key = normalize_tactic_name(tactic);
    for (std::size_t i = 0; i < kTactics.size(); ++i) {
        if (key == kTactics[i].id || key == kTactics[i].name) return static_cast<int>(i) + 1;
    }
    return 0;
}

CategoryId categorize(const Alert& alert) {
    if (alert.detector && alert.rule && !alert.detector->empty() && !alert.rule->empty()) {
        return CategoryId{*alert.detector + "::" + *alert.rule, CategorySource::DetectorRule};
    }
    std::string normalized = strip_entities(alert.title);
    if (normalized.empty()) {
        throw EmptyCategory("alert " + alert.id + " has no detector/rule and an empty title");
    }
    return CategoryId{std::move(normalized), CategorySource::NormalizedTitle};
}

const CategoryId& assign_category(Alert& alert) {
    alert.category = categorize(alert);
    return alert.category;
}

StaticFeatures extract_static_features(const Alert& alert) {
    return StaticFeatures{
        static_cast<double>(alert.entities.size()),
        static_cast<double>(std::max<std::int64_t>(alert.entity_relationship_count, 0)),
        static_cast<double>(std::clamp(alert.mitre_tactic_max, 0, kMaxTacticOrdinal)),
        static_cast<double>(alert.mitre_techniques.size()),
    };
}

std::string_view to_string(ActionKind action) {
    return action == ActionKind::Investigated ? "investigated" : "not_investigated";
}

std::string_view to_string(LabelKind label) {
    return label == LabelKind::Malicious ? "malicious" : "benign";
}

std::optional<ActionKind> parse_action(std::string_view text) {
    if (text == "investigated" || text == "investigate") return ActionKind::Investigated;
    if (text == "not_investigated" || text == "close" || text == "closed")
        return ActionKind::NotInvestigated;
    return std::nullopt;
}

std::optional<LabelKind> parse_label(std::string_view text) {
    if (text == "malicious") return LabelKind::Malicious;
    if (text == "benign") return LabelKind::Benign;
    return std::nullopt;
}

}  // namespace aact
