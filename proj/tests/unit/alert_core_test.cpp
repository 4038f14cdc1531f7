#include <gtest/gtest.h>

#include <regex>

#include "aact/alert_io.hpp"
#include "aact/errors.hpp"

using namespace aact;
using nlohmann::json;

namespace {

json listing_record() {
    return json::parse(R"({
        "id": "unique_alert_uri",
        "tenant_id": "11772",
        "metadata": {
            "creator": {"detector": {"name": "AzureAD"}, "rule": {"id": "R-17"}},
            "severity": 0.75,
            "title": "Unfamiliar sign-in properties",
            "created_at": "2023-05-01T10:00:00Z"
        },
        "entities": [{"identifier": "alice@corp.example", "kind": "user"}, {"identifier": "host-1"}],
        "entity_relationships": [{"from": "alice", "to": "svc"}],
        "mitre_attack": {"tactics": ["TA0001", "Privilege Escalation"], "techniques": ["T1078", "T1110", "T1021"]}
    })");
}

}  // namespace

TEST(ParseAlert, ReadsTheListingLayout) {
    const Alert a = parse_alert(listing_record());
    EXPECT_EQ(a.id, "unique_alert_uri");
    EXPECT_EQ(a.tenant_id, "11772");
    EXPECT_EQ(a.title, "Unfamiliar sign-in properties");
    ASSERT_TRUE(a.severity);
    EXPECT_DOUBLE_EQ(*a.severity, 0.75);
    EXPECT_DOUBLE_EQ(a.created_at, 1682935200.0);
    EXPECT_EQ(a.detector, "AzureAD");
    EXPECT_EQ(a.rule, "R-17");
    EXPECT_EQ(a.entities.size(), 2u);
    EXPECT_EQ(a.entity_relationship_count, 1);
    // Initial Access is 3 and Privilege Escalation 6 in kill-chain order.
    EXPECT_EQ(a.mitre_tactic_max, 6);
    EXPECT_EQ(a.category.value, "AzureAD::R-17");
    EXPECT_EQ(a.category.source, CategorySource::DetectorRule);
}

TEST(ParseAlert, MissingTacticsGiveZero) {
    json r = listing_record();
    r.erase("mitre_attack");
    EXPECT_EQ(parse_alert(r).mitre_tactic_max, 0);
}

TEST(ParseAlert, MissingRequiredFieldsAreNamed) {
    for (const char* field : {"id", "tenant_id"}) {
        json r = listing_record();
        r.erase(field);
        try {
            parse_alert(r);
            FAIL() << "expected MissingField for " << field;
        } catch (const MissingField& e) {
            EXPECT_EQ(e.field(), field);
        }
    }
    json r = listing_record();
    r["metadata"].erase("title");
    EXPECT_THROW(parse_alert(r), MissingField);
    r = listing_record();
    r["metadata"].erase("created_at");
    EXPECT_THROW(parse_alert(r), MissingField);
}

TEST(ParseAlert, RejectsBadTimestamps) {
    for (const char* bad : {"2023-13-01T00:00:00Z", "2023-05-01 10:00", "yesterday", "2023-05-01T10:00:00Zjunk"}) {
        json r = listing_record();
        r["metadata"]["created_at"] = bad;
        EXPECT_THROW(parse_alert(r), MalformedTimestamp) << bad;
    }
    json r = listing_record();
    r["metadata"]["created_at"] = -5;
    EXPECT_THROW(parse_alert(r), MalformedTimestamp);
}

TEST(ParseAlert, TimestampOffsetsAndFractions) {
    EXPECT_DOUBLE_EQ(parse_iso8601("1970-01-01T00:00:00Z"), 0.0);
    EXPECT_DOUBLE_EQ(parse_iso8601("1970-01-01T01:00:00+01:00"), 0.0);
    EXPECT_DOUBLE_EQ(parse_iso8601("1970-01-02T00:00:00.5Z"), kDay + 0.5);
}

TEST(ParseAlert, JsonRoundTrip) {
    const Alert a = parse_alert(listing_record());
    const Alert b = parse_alert(alert_to_json(a));
    EXPECT_EQ(alert_to_json(a), alert_to_json(b));
    EXPECT_EQ(a.category, b.category);
    EXPECT_EQ(a.mitre_tactic_max, b.mitre_tactic_max);
}

TEST(ParseAlert, CategoryStableUnderReparsing) {
    const json r = listing_record();
    EXPECT_EQ(categorize(parse_alert(r)), categorize(parse_alert(r)));
}

TEST(StripEntities, Examples) {
    EXPECT_EQ(strip_entities("Potential stolen user credential for user@domain"),
              "potential stolen user credential for <entity>");
    EXPECT_EQ(strip_entities("Malware on 10.0.0.5"), "malware on <entity>");
    EXPECT_EQ(strip_entities(""), "");
}

TEST(StripEntities, EachEntityKind) {
    EXPECT_EQ(strip_entities("Login from fe80::1ff:fe23:4567:890a"), "login from <entity>");
    EXPECT_EQ(strip_entities("Beacon to evil.example.com"), "beacon to <entity>");
    EXPECT_EQ(strip_entities("Task 123e4567-e89b-12d3-a456-426614174000 failed"), "task <entity> failed");
    EXPECT_EQ(strip_entities("Hash d41d8cd98f00b204e9800998ecf8427e seen"), "hash <entity> seen");
    EXPECT_EQ(strip_entities("Hash da39a3ee5e6b4b0d3255bfef95601890afd80709 seen"), "hash <entity> seen");
    EXPECT_EQ(strip_entities("Dropped C:\\Users\\bob\\evil.exe"), "dropped <entity>");
    EXPECT_EQ(strip_entities("Exec  /tmp/x/payload   now"), "exec <entity> now");
}

// The IPv4 case checked against std::regex with the same pattern.
TEST(StripEntities, MatchesReferenceRegexForIpv4) {
    const std::regex ipv4(R"(\b(?:\d{1,3}\.){3}\d{1,3}\b)");
    for (const char* title : {"Malware on 10.0.0.5", "Scan 192.168.1.1 to 8.8.8.8", "Port 80 open"}) {
        std::string expected = std::regex_replace(std::string(title), ipv4, "<entity>");
        std::transform(expected.begin(), expected.end(), expected.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        // Lowercasing leaves the placeholder intact.
        EXPECT_EQ(strip_entities(title), expected) << title;
    }
}

TEST(StripEntities, Idempotent) {
    for (const char* title : {"Potential stolen user credential for user@domain", "Malware on 10.0.0.5",
                              "Beacon to evil.example.com from /usr/bin/curl", "  Mixed   CASE  ", "<entity>",
                              "Hash d41d8cd98f00b204e9800998ecf8427e on 2001:db8::1"}) {
        const std::string once = strip_entities(title);
        EXPECT_EQ(strip_entities(once), once) << title;
    }
}

TEST(Categorize, DetectorRuleWins) {
    Alert a;
    a.title = "Something on 10.1.1.1";
    a.detector = "d1";
    a.rule = "r9";
    EXPECT_EQ(categorize(a).value, "d1::r9");
    Alert b = a;
    b.title = "Entirely different";
    EXPECT_EQ(categorize(a), categorize(b));
}

TEST(Categorize, TitleFallback) {
    Alert a;
    a.title = "Unfamiliar sign-in properties";
    const CategoryId c = categorize(a);
    EXPECT_EQ(c.value, "unfamiliar sign-in properties");
    EXPECT_EQ(c.source, CategorySource::NormalizedTitle);
    a.rule = "r1";  // rule without detector still falls back to the title
    EXPECT_EQ(categorize(a).source, CategorySource::NormalizedTitle);
}

TEST(Categorize, EmptyBothWaysThrows) {
    Alert a;
    a.title = "   ";
    EXPECT_THROW(categorize(a), EmptyCategory);
}

TEST(AitRecord, NameIsTheCategory) {
    const json r = {{"timestamp", 1642000000},
                    {"name", "Wazuh: SSH brute force"},
                    {"host", "mail"},
                    {"event_label", "dirb"},
                    {"time_label", "attack"}};
    const AitRecord rec = parse_ait_record(r, "fox", "fox:1");
    EXPECT_EQ(rec.alert.category.value, "Wazuh: SSH brute force");
    EXPECT_EQ(rec.alert.tenant_id, "fox");
    ASSERT_EQ(rec.alert.entities.size(), 1u);
    EXPECT_EQ(rec.alert.entities[0].identifier, "mail");
    EXPECT_TRUE(rec.malicious);
}

TEST(AitRecord, AttackEventOutsideWindowIsBenign) {
    const json r = {{"timestamp", 1642000000}, {"name", "x"}, {"event_label", "dirb"}, {"time_label", "-"}};
    EXPECT_FALSE(parse_ait_record(r, "fox", "fox:1").malicious);
    const json inside = {{"timestamp", 1642000000}, {"name", "x"}, {"event_label", "-"}, {"time_label", "attack"}};
    EXPECT_FALSE(parse_ait_record(inside, "fox", "fox:1").malicious);
}

TEST(StaticFeatures, Examples) {
    Alert a;
    a.entities = {{"h1", {}}, {"h2", {}}, {"u1", {}}};
    a.entity_relationship_count = 2;
    a.mitre_tactic_max = std::max(tactic_ordinal("TA0002"), tactic_ordinal("TA0005"));
    a.mitre_techniques = {"T1", "T2", "T3", "T4"};
    // Execution is 4 and Defense Evasion 7 in kill-chain order.
    EXPECT_EQ(extract_static_features(a), (StaticFeatures{3, 2, 7, 4}));
    EXPECT_EQ(extract_static_features(Alert{}), (StaticFeatures{0, 0, 0, 0}));
    Alert b;
    b.entities = {{"h", {}}};
    b.mitre_tactic_max = tactic_ordinal("Impact");
    EXPECT_EQ(extract_static_features(b)[2], 14.0);
}

TEST(TacticOrdinal, KillChainOrder) {
    EXPECT_EQ(tactic_ordinal("Reconnaissance"), 1);
    EXPECT_EQ(tactic_ordinal("TA0043"), 1);
    EXPECT_EQ(tactic_ordinal("privilege-escalation"), 6);
    EXPECT_EQ(tactic_ordinal("TA0040"), 14);
    EXPECT_EQ(tactic_ordinal("unheard of"), 0);
}

TEST(Resolution, JsonRoundTrip) {
    ResolutionEvent r;
    r.alert_id = "a1";
    r.action = ActionKind::Investigated;
    r.label = LabelKind::Malicious;
    r.resolved_at = 123.5;
    r.analyst_id = "bob";
    EXPECT_EQ(resolution_from_json(resolution_to_json(r)), r);
    EXPECT_THROW(resolution_from_json(json{{"resolved_at", 1}}), MissingField);
    EXPECT_THROW(resolution_from_json(json{{"action", "dance"}, {"resolved_at", 1}}), MalformedRecord);
}
