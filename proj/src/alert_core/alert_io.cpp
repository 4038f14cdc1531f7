#include "aact/alert_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cctype>
#include <cmath>
#include <string>

#include "aact/errors.hpp"

namespace aact {

using nlohmann::json;

namespace {

const json* find(const json& obj, std::string_view key) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(std::string(key));
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

// Looks in the metadata block first, then at top level.
const json* find_meta(const json& record, std::string_view key) {
    if (const json* meta = find(record, "metadata")) {
        if (const json* v = find(*meta, key)) return v;
    }
    return find(record, key);
}

std::optional<std::string> as_name(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_object()) {
        for (const char* key : {"name", "id", "title"}) {
            if (const json* inner = find(v, key)) return as_name(*inner);
        }
    }
    return std::nullopt;
}

Timestamp parse_timestamp(const json& v) {
    if (v.is_number()) {
        const double t = v.get<double>();
        if (!std::isfinite(t) || t < 0) throw MalformedTimestamp("timestamp out of range");
        return t;
    }
    if (v.is_string()) {
        const auto text = v.get<std::string>();
        double t = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), t);
        if (ec == std::errc{} && ptr == text.data() + text.size()) {
            if (!std::isfinite(t) || t < 0) throw MalformedTimestamp("timestamp out of range");
            return t;
        }
        return parse_iso8601(text);
    }
    if (v.is_object()) {
        for (const char* key : {"seconds", "epoch", "value", "timestamp"}) {
            if (const json* inner = find(v, key)) return parse_timestamp(*inner);
        }
    }
    throw MalformedTimestamp("unsupported timestamp encoding");
}

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) throw MalformedTimestamp(std::string(text));
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
    if (ec != std::errc{} || ptr != text.data() + pos + len) {
        throw MalformedTimestamp(std::string(text));
    }
    return value;
}

EntityRef parse_entity(const json& v) {
    EntityRef ref;
    if (v.is_string()) {
        ref.identifier = v.get<std::string>();
    } else if (v.is_object()) {
        for (const char* key : {"identifier", "id", "entity", "value", "name"}) {
            if (const json* inner = find(v, key); inner && inner->is_string()) {
                ref.identifier = inner->get<std::string>();
                break;
            }
        }
        for (const char* key : {"kind", "type"}) {
            if (const json* inner = find(v, key); inner && inner->is_string()) {
                ref.kind = inner->get<std::string>();
                break;
            }
        }
    }
    return ref;
}

void parse_mitre(const json& record, Alert& alert) {
    const json* block = find(record, "mitre_attack");
    if (!block) block = find_meta(record, "mitre_attack");
    auto list = [&](std::string_view key) -> const json* {
        if (block) {
            if (const json* v = find(*block, key)) return v;
        }
        const std::string top = "mitre_" + std::string(key);
        return find_meta(record, top);
    };
    if (const json* techniques = list("techniques"); techniques && techniques->is_array()) {
        for (const auto& t : *techniques) {
            if (auto name = as_name(t)) alert.mitre_techniques.push_back(*name);
        }
    }
    int best = 0;
    if (const json* tactics = list("tactics"); tactics && tactics->is_array()) {
        for (const auto& t : *tactics) {
            if (t.is_number_integer()) {
                best = std::max(best, std::clamp(t.get<int>(), 0, kMaxTacticOrdinal));
            } else if (auto name = as_name(t)) {
                best = std::max(best, tactic_ordinal(*name));
            }
        }
    }
    if (const json* explicit_max = find_meta(record, "mitre_tactic_max");
        explicit_max && explicit_max->is_number_integer()) {
        best = std::max(best, std::clamp(explicit_max->get<int>(), 0, kMaxTacticOrdinal));
    }
    alert.mitre_tactic_max = best;
}

std::string required_string(const json& record, std::string_view key, bool meta) {
    const json* v = meta ? find_meta(record, key) : find(record, key);
    if (!v) throw MissingField(std::string(key));
    auto s = as_name(*v);
    if (!s) throw MissingField(std::string(key));
    return *s;
}

}  // namespace

Timestamp parse_iso8601(std::string_view text) {
    // YYYY-MM-DDTHH:MM:SS
    if (text.size() < 19 || text[4] != '-' || text[7] != '-' ||
        (text[10] != 'T' && text[10] != ' ') || text[13] != ':' || text[16] != ':') {
        throw MalformedTimestamp("not ISO-8601: " + std::string(text));
    }
    using namespace std::chrono;
    const year_month_day ymd{year{parse_int(text, 0, 4)},
                             month{static_cast<unsigned>(parse_int(text, 5, 2))},
                             day{static_cast<unsigned>(parse_int(text, 8, 2))}};
    if (!ymd.ok()) throw MalformedTimestamp("invalid date: " + std::string(text));
    const int hh = parse_int(text, 11, 2);
    const int mm = parse_int(text, 14, 2);
    const int ss = parse_int(text, 17, 2);
    if (hh > 23 || mm > 59 || ss > 60) throw MalformedTimestamp("invalid time: " + std::string(text));

    std::size_t pos = 19;
    double fraction = 0.0;
    if (pos < text.size() && text[pos] == '.') {
        const std::size_t start = ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos == start) throw MalformedTimestamp("empty fraction: " + std::string(text));
        double scale = 0.1;
        for (std::size_t i = start; i < pos; ++i, scale /= 10) fraction += (text[i] - '0') * scale;
    }
    int offset_seconds = 0;
    if (pos < text.size()) {
        const char sign = text[pos];
        if (sign == 'Z' || sign == 'z') {
            ++pos;
        } else if (sign == '+' || sign == '-') {
            const int oh = parse_int(text, pos + 1, 2);
            std::size_t mpos = pos + 3;
            if (mpos < text.size() && text[mpos] == ':') ++mpos;
            const int om = parse_int(text, mpos, 2);
            offset_seconds = (sign == '+' ? 1 : -1) * (oh * 3600 + om * 60);
            pos = mpos + 2;
        }
        if (pos != text.size()) throw MalformedTimestamp("trailing data: " + std::string(text));
    }
    const auto days = sys_days{ymd}.time_since_epoch().count();
    const double t = static_cast<double>(days) * kDay + hh * 3600.0 + mm * 60.0 + ss -
                     offset_seconds + fraction;
    if (t < 0) throw MalformedTimestamp("timestamp before epoch: " + std::string(text));
    return t;
}

Alert parse_alert(const json& record) {
    if (!record.is_object()) throw MalformedRecord("alert record is not an object");
    Alert alert;
    alert.id = required_string(record, "id", false);
    alert.tenant_id = required_string(record, "tenant_id", true);
    const json* created = find_meta(record, "created_at");
    if (!created) throw MissingField("created_at");
    alert.created_at = parse_timestamp(*created);
    alert.title = required_string(record, "title", true);

    const json* creator = find_meta(record, "creator");
    if (creator) {
        if (const json* d = find(*creator, "detector")) alert.detector = as_name(*d);
        if (const json* r = find(*creator, "rule")) alert.rule = as_name(*r);
    }
    if (!alert.detector) {
        if (const json* d = find_meta(record, "detector")) alert.detector = as_name(*d);
    }
    if (!alert.rule) {
        if (const json* r = find_meta(record, "rule")) alert.rule = as_name(*r);
    }
    if (const json* sev = find_meta(record, "severity"); sev && sev->is_number()) {
        alert.severity = std::clamp(sev->get<double>(), 0.0, 1.0);
    }
    if (const json* ents = find(record, "entities"); ents && ents->is_array()) {
        for (const auto& e : *ents) {
            EntityRef ref = parse_entity(e);
            // Entities without an identifier carry no similarity signal.
            if (!ref.identifier.empty()) alert.entities.push_back(std::move(ref));
        }
    }
    if (const json* rel = find_meta(record, "entity_relationship_count");
        rel && rel->is_number_integer()) {
        alert.entity_relationship_count = std::max<std::int64_t>(rel->get<std::int64_t>(), 0);
    } else if (const json* rels = find(record, "entity_relationships"); rels && rels->is_array()) {
        alert.entity_relationship_count = static_cast<std::int64_t>(rels->size());
    }
    parse_mitre(record, alert);

    if (const json* res = find(record, "resolution"); res && res->is_object()) {
        ResolutionEvent ev = resolution_from_json(*res);
        if (ev.alert_id.empty()) ev.alert_id = alert.id;
        alert.resolution = std::move(ev);
    }
    assign_category(alert);
    return alert;
}

Alert parse_alert(std::string_view line) {
    json record;
    try {
        record = json::parse(line);
    } catch (const json::parse_error& e) {
        throw MalformedRecord(e.what());
    }
    return parse_alert(record);
}

json alert_to_json(const Alert& alert) {
    json creator = json::object();
    if (alert.detector) creator["detector"] = *alert.detector;
    if (alert.rule) creator["rule"] = *alert.rule;
    json metadata = {{"title", alert.title}, {"created_at", alert.created_at}, {"creator", creator}};
    if (alert.severity) metadata["severity"] = *alert.severity;
    metadata["mitre_tactic_max"] = alert.mitre_tactic_max;
    metadata["entity_relationship_count"] = alert.entity_relationship_count;

    json entities = json::array();
    for (const auto& e : alert.entities) {
        json ent = {{"identifier", e.identifier}};
        if (e.kind) ent["kind"] = *e.kind;
        entities.push_back(std::move(ent));
    }
    json out = {{"id", alert.id},
                {"tenant_id", alert.tenant_id},
                {"metadata", std::move(metadata)},
                {"entities", std::move(entities)},
                {"mitre_attack", {{"techniques", alert.mitre_techniques}, {"tactics", json::array()}}}};
    if (alert.resolution) out["resolution"] = resolution_to_json(*alert.resolution);
    return out;
}

json resolution_to_json(const ResolutionEvent& event) {
    json out = {{"alert_id", event.alert_id},
                {"action", std::string(to_string(event.action))},
                {"resolved_at", event.resolved_at}};
    if (event.label) out["label"] = std::string(to_string(*event.label));
    if (event.analyst_id) out["analyst_id"] = *event.analyst_id;
    return out;
}

ResolutionEvent resolution_from_json(const json& record) {
    if (!record.is_object()) throw MalformedRecord("resolution is not an object");
    ResolutionEvent ev;
    if (const json* id = find(record, "alert_id"); id && id->is_string()) ev.alert_id = id->get<std::string>();
    const json* action = find(record, "action");
    if (!action || !action->is_string()) throw MissingField("action");
    auto parsed = parse_action(action->get<std::string>());
    if (!parsed) throw MalformedRecord("unknown action: " + action->get<std::string>());
    ev.action = *parsed;
    if (const json* label = find(record, "label"); label && label->is_string()) {
        ev.label = parse_label(label->get<std::string>());
        if (!ev.label) throw MalformedRecord("unknown label: " + label->get<std::string>());
    }
    const json* at = find(record, "resolved_at");
    if (!at) throw MissingField("resolved_at");
    ev.resolved_at = parse_timestamp(*at);
    if (const json* analyst = find(record, "analyst_id"); analyst && analyst->is_string()) {
        ev.analyst_id = analyst->get<std::string>();
    }
    return ev;
}

bool ait_label_is_attack(std::string_view label) {
    std::string lower(label);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return !(lower.empty() || lower == "-" || lower == "false_positive" || lower == "benign" ||
             lower == "normal" || lower == "none" || lower == "0" || lower == "false");
}

namespace {

bool ait_field_is_attack(const json* v) {
    if (!v) return false;
    if (v->is_string()) return ait_label_is_attack(v->get<std::string>());
    if (v->is_boolean()) return v->get<bool>();
    if (v->is_number()) return v->get<double>() != 0.0;
    if (v->is_array()) {
        return std::any_of(v->begin(), v->end(),
                           [](const json& item) { return ait_field_is_attack(&item); });
    }
    return false;
}

}  // namespace

AitRecord parse_ait_record(const json& record, std::string_view tenant, std::string_view fallback_id) {
    if (!record.is_object()) throw MalformedRecord("AIT record is not an object");
    AitRecord out;
    Alert& alert = out.alert;
    const json* ts = find(record, "timestamp");
    if (!ts) throw MalformedRecord("AIT record without timestamp");
    try {
        alert.created_at = parse_timestamp(*ts);
    } catch (const MalformedTimestamp& e) {
        throw MalformedRecord(e.what());
    }
    const json* name = find(record, "name");
    if (!name || !as_name(*name) || as_name(*name)->empty()) {
        throw MalformedRecord("AIT record without name");
    }
    alert.title = *as_name(*name);
    alert.category = CategoryId{alert.title, CategorySource::DetectorRule};
    if (const json* id = find(record, "id"); id && as_name(*id)) {
        alert.id = *as_name(*id);
    } else {
        alert.id = std::string(fallback_id);
    }
    alert.tenant_id = std::string(tenant);
    if (const json* scenario = find(record, "scenario"); scenario && as_name(*scenario)) {
        alert.tenant_id = *as_name(*scenario);
    }
    if (const json* host = find(record, "host"); host && as_name(*host) && !as_name(*host)->empty()) {
        alert.entities.push_back(EntityRef{*as_name(*host), std::string("host")});
    }
    out.malicious = ait_field_is_attack(find(record, "time_label")) &&
                    ait_field_is_attack(find(record, "event_label"));
    return out;
}

}  // namespace aact
