#pragma once

#include <json.hpp>

#include <string_view>

#include "aact/alert.hpp"

namespace aact {

/// Parses one alert record in the normalized alert-object layout:
///
///   {"id": "...", "tenant_id": "...",
///    "metadata": {"creator": {"detector": ..., "rule": ...},
///                 "severity": 0.75, "title": "...", "created_at": ...},
///    "entities": [...], "mitre_attack": {"tactics": [...], "techniques": [...]}}
///
/// `created_at` may be epoch seconds or an ISO-8601 string. Detector and rule
/// may be strings or objects carrying a "name" or "id". The category is
/// assigned before returning.
Alert parse_alert(const nlohmann::json& record);
Alert parse_alert(std::string_view line);

/// Inverse of parse_alert for the fields the service persists. Round-trips
/// through parse_alert to an equal Alert.
nlohmann::json alert_to_json(const Alert& alert);

nlohmann::json resolution_to_json(const ResolutionEvent& event);
ResolutionEvent resolution_from_json(const nlohmann::json& record);

/// Epoch seconds from "YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]".
Timestamp parse_iso8601(std::string_view text);

/// One record of the AIT alert data set mapped onto an Alert: the testbed
/// becomes the tenant, the host the single entity and `name` the category.
struct AitRecord {
    Alert alert;
    bool malicious = false;
};

/// `time_label` marks the attack window; `event_label` marks attack-related
/// events. An alert is malicious only when both indicate an attack, so events
/// labelled malicious outside an attack window are treated as benign.
AitRecord parse_ait_record(const nlohmann::json& record, std::string_view tenant,
                           std::string_view fallback_id);

bool ait_label_is_attack(std::string_view label);

}  // namespace aact
