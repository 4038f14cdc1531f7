#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <map>
#include <thread>

#include "aact/errors.hpp"
#include "aact/pipeline.hpp"
#include "aact/triage.hpp"
#include "service_fixture.hpp"

using namespace aact;
using namespace aact::fixture;
namespace fs = std::filesystem;

namespace {

ServiceConfig closing_config(double threshold, std::int64_t budget) {
    ServiceConfig c;
    c.close_threshold = threshold;
    c.sampler.budget = budget;
    c.sampler.seed = 7;
    c.checkpoint_interval = 0;
    return c;
}

QueueEntry entry(const std::string& id, const std::string& tenant, double p, Timestamp at, std::uint64_t seq) {
    QueueEntry e;
    e.alert_id = id;
    e.tenant = tenant;
    e.raw_probability = p;
    e.threat_score = threat_score(p);
    e.enqueued_at = at;
    e.sequence = seq;
    return e;
}

std::vector<std::string> ids(const std::vector<QueueEntry>& entries) {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.alert_id);
    return out;
}

}  // namespace

TEST(ThreatScore, OneDecimalOfTen) {
    EXPECT_EQ(threat_score(0.92), 9.2);
    EXPECT_EQ(threat_score(0.0), 0.0);
    EXPECT_EQ(threat_score(1.0), 10.0);
    EXPECT_EQ(threat_score(0.456), 4.6);
}

TEST(Queue, OrdersByProbabilityThenAge) {
    TriageQueue q;
    q.push(entry("low", "t1", 0.7, 10, 1));
    q.push(entry("high", "t1", 0.9, 30, 2));
    q.push(entry("high_old", "t2", 0.9, 20, 3));
    q.push(entry("tie_late", "t2", 0.9, 20, 4));
    EXPECT_EQ(ids(q.list()), (std::vector<std::string>{"high_old", "tie_late", "high", "low"}));
    EXPECT_EQ(ids(q.list(std::string_view("t1"))), (std::vector<std::string>{"high", "low"}));
    EXPECT_EQ(ids(q.list(std::nullopt, 1)), std::vector<std::string>{"high_old"});
    EXPECT_TRUE(q.erase("high"));
    EXPECT_FALSE(q.erase("high"));
    EXPECT_EQ(q.size(), 3u);
    EXPECT_EQ(q.find("high"), nullptr);
    ASSERT_NE(q.find("low"), nullptr);
}

TEST(Sampler, BudgetSplitsEvenlyInSteadyState) {
    SamplerConfig c;
    c.budget = 10;
    c.seed = 3;
    Sampler s(c);
    for (int day = 0; day < 6; ++day) {
        std::map<std::string, int> picked;
        for (int i = 0; i < 100; ++i) {
            const std::string cat = "c" + std::to_string(i % 5);
            if (s.decide(cat, day * kDay + i * 600.0)) ++picked[cat];
        }
        int total = 0;
        for (const auto& [cat, n] : picked) {
            EXPECT_LE(n, 2) << "day " << day << " " << cat;
            total += n;
        }
        EXPECT_LE(total, 10);
        if (day > 0) {
            // Same volume as the previous period: every quota is met exactly.
            EXPECT_EQ(total, 10) << day;
            for (int k = 0; k < 5; ++k) EXPECT_EQ(s.sampled_in_period("c" + std::to_string(k)), 2);
        }
    }
}

TEST(Sampler, ZeroBudgetNeverSamples) {
    SamplerConfig c;
    c.budget = 0;
    Sampler s(c);
    for (int i = 0; i < 500; ++i) EXPECT_FALSE(s.decide("c" + std::to_string(i % 3), i * 500.0));
}

TEST(Sampler, SingleCategoryTakesTheWholeBudget) {
    SamplerConfig c;
    c.budget = 7;
    Sampler s(c);
    for (int day = 0; day < 4; ++day) {
        int n = 0;
        for (int i = 0; i < 50; ++i) n += s.decide("only", day * kDay + i * 1000.0) ? 1 : 0;
        EXPECT_LE(n, 7);
        if (day > 0) EXPECT_EQ(n, 7);
    }
}

TEST(Sampler, FractionalBudgetHasAFloor) {
    SamplerConfig c;
    c.fraction = 0.01;
    c.floor = 10;
    Sampler s(c);
    for (int day = 0; day < 3; ++day) {
        for (int i = 0; i < 200; ++i) s.decide("x", day * kDay + i * 300.0);
    }
    EXPECT_EQ(s.budget(), 10);
}

TEST(Sampler, EstimatesFalseNegativesPerStratum) {
    SamplerConfig c;
    c.budget = 4;
    Sampler s(c);
    std::vector<std::pair<Timestamp, bool>> picks;
    for (int i = 0; i < 40; ++i) {
        const Timestamp t = kDay + i * 1000.0;
        if (s.decide("a", t)) picks.emplace_back(t, picks.size() % 2 == 0);
    }
    for (const auto& [t, positive] : picks) s.record_outcome("a", t, positive);
    ASSERT_FALSE(picks.empty());
    const auto& st = s.strata().begin()->second;
    EXPECT_EQ(st.closed, 40);
    EXPECT_DOUBLE_EQ(s.estimated_false_negatives(),
                     40.0 * static_cast<double>(st.positive) / static_cast<double>(st.resolved));
}

TEST(Service, ScoresAndRanks) {
    TriageService service(closing_config(0.0, 0), tactic_model(4.5, 0.3, 0.92));
    const ScoreResult hi = service.score_alert(service_alert("hi", "t1", "r1", 1000, 8));
    const ScoreResult lo = service.score_alert(service_alert("lo", "t1", "r1", 1010, 2));
    EXPECT_EQ(hi.disposition, "queued");
    EXPECT_EQ(hi.entry.threat_score, 9.2);
    EXPECT_FALSE(hi.fail_open);
    EXPECT_EQ(ids(service.queue_listing()), (std::vector<std::string>{"hi", "lo"}));
    EXPECT_LE(hi.entry.top_features.size(), 5u);
    for (std::size_t i = 1; i < hi.entry.top_features.size(); ++i) {
        EXPECT_GE(std::abs(hi.entry.top_features[i - 1].contribution), std::abs(hi.entry.top_features[i].contribution));
    }
    ASSERT_FALSE(hi.entry.top_features.empty());
    EXPECT_EQ(hi.entry.top_features[0].name, "max_tactic_score");
    EXPECT_THROW(service.score_alert(service_alert("hi", "t1", "r1", 1020)), DuplicateAlert);
    EXPECT_EQ(lo.entry.raw_probability, predict(tactic_model(4.5, 0.3, 0.92), service.alert_state("lo")->features));
}

TEST(Service, FailsOpenWithoutAModel) {
    TriageService service(closing_config(0.9, 0));
    const ScoreResult r = service.score_alert(service_alert("a", "t", "r", 100));
    EXPECT_EQ(r.disposition, "queued");
    ASSERT_TRUE(r.fail_open);
    EXPECT_FALSE(r.entry.scored);
    EXPECT_EQ(r.entry.raw_probability, 1.0);
    EXPECT_EQ(r.entry.threat_score, 10.0);
    EXPECT_EQ(service.metrics().fail_open, 1);
}

TEST(Service, FailsOpenOnLateAlerts) {
    ServiceConfig c = closing_config(0.9, 0);
    c.store.lateness = 60;
    TriageService service(c, constant_model(0.1));
    EXPECT_EQ(service.score_alert(service_alert("now", "t", "r", 10000)).disposition, "auto-closed");
    const ScoreResult late = service.score_alert(service_alert("late", "t", "r", 100));
    EXPECT_EQ(late.disposition, "queued");
    EXPECT_TRUE(late.fail_open);
}

TEST(Service, AutoClosesUnlessSampled) {
    TriageService closed(closing_config(0.5, 0), constant_model(0.2));
    const ScoreResult r = closed.score_alert(service_alert("a", "t", "r", 100));
    EXPECT_EQ(r.disposition, "auto-closed");
    EXPECT_EQ(closed.queue_listing().size(), 0u);
    EXPECT_EQ(closed.alert_state("a")->status, AlertStatus::AutoClosed);
    EXPECT_THROW(closed.ingest_feedback(human("a", 200, ActionKind::Investigated)), DuplicateResolution);

    TriageService sampled(closing_config(0.5, 1000), constant_model(0.2));
    int flagged = 0;
    for (int i = 0; i < 50; ++i) {
        const ScoreResult s = sampled.score_alert(service_alert("s" + std::to_string(i), "t", "r", 100.0 + i));
        if (s.disposition == "queued") {
            EXPECT_TRUE(s.entry.sampled_for_review);
            ++flagged;
        }
    }
    EXPECT_GT(flagged, 0);
    EXPECT_EQ(sampled.metrics().sampled, flagged);
}

TEST(Service, FeedbackErrors) {
    TriageService service(closing_config(0.0, 0), constant_model(0.6));
    service.score_alert(service_alert("a", "t", "r", 100));
    EXPECT_THROW(service.ingest_feedback(human("nope", 200, ActionKind::Investigated)), UnknownAlert);
    service.ingest_feedback(human("a", 200, ActionKind::Investigated, LabelKind::Malicious));
    EXPECT_THROW(service.ingest_feedback(human("a", 300, ActionKind::Investigated)), DuplicateResolution);
    EXPECT_EQ(service.alert_state("a")->status, AlertStatus::Resolved);
    EXPECT_TRUE(service.queue_listing().empty());
}

TEST(Service, InvestigationRaisesLaterRates) {
    TriageService service(closing_config(0.0, 0), constant_model(0.6));
    const std::size_t slot = full_slot("tenant_category_investigation_rate_1d");
    service.score_alert(service_alert("a1", "t", "r", 1000));
    service.score_alert(service_alert("a2", "t", "r", 1100));
    service.ingest_feedback(human("a1", 1200, ActionKind::Investigated));
    service.ingest_feedback(human("a2", 1200, ActionKind::NotInvestigated));
    service.score_alert(service_alert("b1", "t", "r", 1300));
    EXPECT_EQ(service.alert_state("a2")->features[slot], 0.0);
    EXPECT_EQ(service.alert_state("b1")->features[slot], 0.5);
    service.score_alert(service_alert("b2", "t", "r", 1400));
    service.ingest_feedback(human("b1", 1500, ActionKind::Investigated));
    service.score_alert(service_alert("b3", "t", "r", 1600));
    EXPECT_GT(service.alert_state("b3")->features[slot], service.alert_state("b2")->features[slot]);
}

namespace {

// 100 queued alerts whose label follows the tactic, and 400 low-tactic ones
// the model closes.
void run_mixed_history(TriageService& service) {
    Timestamp t = 1e6;
    int queued = 0;
    for (int i = 0; i < 500; ++i, t += 60) {
        const bool high = i % 5 == 0;
        const int tactic = high ? 5 + queued % 10 : 1;
        const std::string id = "m" + std::to_string(i);
        const ScoreResult r = service.score_alert(service_alert(id, "t", "r" + std::to_string(i % 3), t, tactic));
        if (r.disposition == "queued") {
            ++queued;
            service.ingest_feedback(
                human(id, t + 30, tactic >= 10 ? ActionKind::Investigated : ActionKind::NotInvestigated));
        }
    }
}

}  // namespace

TEST(Retrain, ExcludesAutoClosedAlerts) {
    TriageService service(closing_config(0.5, 0), tactic_model(4.5, 0.1, 0.9));
    run_mixed_history(service);
    const auto m = service.metrics();
    EXPECT_EQ(m.auto_closed, 400);
    EXPECT_EQ(m.resolved, 100);
    const auto history = service.training_history();
    ASSERT_EQ(history.size(), 100u);
    for (const auto& row : history) {
        EXPECT_EQ(row.provenance, Provenance::Human);
        EXPECT_EQ(service.alert_state(row.alert_id)->status, AlertStatus::Resolved);
    }
    EXPECT_EQ(service.training_set().rows(), 100u);
}

TEST(Retrain, SampledAlertsAreKeptWithTheirTag) {
    TriageService service(closing_config(0.5, 20), tactic_model(4.5, 0.1, 0.9));
    Timestamp t = 1e6;
    std::size_t sampled = 0;
    for (int i = 0; i < 600; ++i, t += 600) {
        const std::string id = "s" + std::to_string(i);
        const ScoreResult r = service.score_alert(service_alert(id, "t", "r" + std::to_string(i % 4), t, i % 2 ? 8 : 1));
        if (r.disposition == "queued") {
            sampled += r.entry.sampled_for_review ? 1 : 0;
            service.ingest_feedback(human(id, t + 30, ActionKind::NotInvestigated));
        }
    }
    ASSERT_GT(sampled, 0u);
    std::size_t tagged = 0;
    for (const auto& row : service.training_history()) {
        const AlertState st = *service.alert_state(row.alert_id);
        EXPECT_NE(st.status, AlertStatus::AutoClosed);
        EXPECT_EQ(row.provenance == Provenance::SampledHuman, st.sampled);
        tagged += row.provenance == Provenance::SampledHuman ? 1 : 0;
    }
    EXPECT_EQ(tagged, sampled);
    EXPECT_EQ(service.training_history().size(), 300u + sampled);
}

TEST(Retrain, SwapsInABetterModel) {
    TriageService service(closing_config(0.5, 0), tactic_model(4.5, 0.1, 0.9));
    run_mixed_history(service);
    const auto before = service.model_version();
    const ModelArtifact fresh = service.retrain();
    EXPECT_EQ(service.model_version(), before + 1);
    EXPECT_EQ(*service.model(), fresh);
}

TEST(Retrain, RejectsAValidationRegression) {
    TriageService service(closing_config(0.5, 0), tactic_model(4.5, 0.1, 0.9));
    run_mixed_history(service);
    service.retrain();
    const auto version = service.model_version();
    const auto current = *service.model();
    // Ranks the holdout backwards.
    EXPECT_THROW(service.install_model(tactic_model(9.5, 0.9, 0.1)), ValidationRegression);
    EXPECT_EQ(service.model_version(), version);
    EXPECT_EQ(*service.model(), current);
    service.install_model(current);
    EXPECT_EQ(service.model_version(), version + 1);
}

TEST(Retrain, NeedsHumanLabels) {
    TriageService service(closing_config(0.5, 0), constant_model(0.1));
    service.score_alert(service_alert("a", "t", "r", 100));
    EXPECT_THROW(service.retrain(), EmptyData);
}

TEST(Retrain, HotSwapServesOneVersionPerRequest) {
    TriageService service(closing_config(0.0, 0), constant_model(0.5));
    const std::vector<double> zeros(feature_names(FeatureConfig::full()).size(), 0.0);
    std::map<std::uint64_t, double> expected;
    std::vector<ModelArtifact> models;
    const std::uint64_t first = service.model_version();
    expected[first] = predict(constant_model(0.5), zeros);
    for (int i = 1; i <= 40; ++i) {
        models.push_back(constant_model(0.01 + 0.02 * i));
        expected[first + static_cast<std::uint64_t>(i)] = predict(models.back(), zeros);
    }
    std::vector<std::vector<ScoreResult>> results(3);
    std::atomic<bool> go{false};
    std::vector<std::thread> workers;
    for (int w = 0; w < 3; ++w) {
        workers.emplace_back([&, w] {
            while (!go) std::this_thread::yield();
            for (int i = 0; i < 300; ++i) {
                results[static_cast<std::size_t>(w)].push_back(
                    service.score_alert(service_alert("w" + std::to_string(w) + "_" + std::to_string(i), "t", "r", 5000)));
            }
        });
    }
    std::thread swapper([&] {
        while (!go) std::this_thread::yield();
        for (auto& m : models) {
            service.install_model(m, false);
            std::this_thread::yield();
        }
    });
    go = true;
    for (auto& t : workers) t.join();
    swapper.join();
    std::size_t checked = 0;
    for (const auto& per_thread : results) {
        std::uint64_t last = 0;
        for (const auto& r : per_thread) {
            ASSERT_TRUE(r.entry.scored);
            ASSERT_TRUE(expected.count(r.entry.model_version));
            ASSERT_EQ(r.entry.raw_probability, expected[r.entry.model_version]);
            ASSERT_EQ(service.alert_state(r.alert_id)->model_version, r.entry.model_version);
            // Versions seen by one caller never go backwards.
            ASSERT_GE(r.entry.model_version, last);
            last = r.entry.model_version;
            ++checked;
        }
    }
    EXPECT_EQ(checked, 900u);
    EXPECT_EQ(service.model_version(), first + 40);
}

TEST(Persistence, RestartReproducesTheStoreExactly) {
    const fs::path dir = scratch("recovery");
    SyntheticSocOptions o;
    o.span = 6 * kDay;
    o.alerts_per_day = 150;
    const auto alerts = synthesize_soc_alerts(o);
    ServiceConfig c = closing_config(0.5, 5);
    c.state_dir = dir;
    c.checkpoint_interval = 150;

    std::string store_bytes;
    nlohmann::json queue_before;
    ServiceMetrics before;
    std::size_t history_before = 0;
    {
        TriageService live(c, tactic_model(6.5, 0.2, 0.8));
        const StreamReplayReport report = replay_stream(live, alerts);
        ASSERT_GT(report.auto_closed, 0u);
        ASSERT_GT(report.queued, 0u);
        store_bytes = live.store_checkpoint();
        for (const auto& e : live.queue_listing()) queue_before.push_back(to_json(e));
        before = live.metrics();
        history_before = live.training_history().size();
    }
    // A crash in the middle of a write leaves a torn final line.
    {
        std::ofstream torn(dir / "events.jsonl", std::ios::app);
        torn << R"({"type":"alert","al)";
    }
    TriageService restarted(c);
    EXPECT_EQ(restarted.store_checkpoint(), store_bytes);
    nlohmann::json queue_after;
    for (const auto& e : restarted.queue_listing()) queue_after.push_back(to_json(e));
    EXPECT_EQ(queue_after, queue_before);
    const ServiceMetrics after = restarted.metrics();
    EXPECT_EQ(after.alerts, before.alerts);
    EXPECT_EQ(after.auto_closed, before.auto_closed);
    EXPECT_EQ(after.sampled, before.sampled);
    EXPECT_EQ(after.resolved, before.resolved);
    EXPECT_EQ(after.sampled_fnr, before.sampled_fnr);
    EXPECT_EQ(after.model_version, before.model_version);
    EXPECT_EQ(restarted.training_history().size(), history_before);
    ASSERT_TRUE(restarted.model());

    // The same stream without persistence ends in the same store state.
    TriageService memory(closing_config(0.5, 5), tactic_model(6.5, 0.2, 0.8));
    replay_stream(memory, alerts);
    EXPECT_EQ(memory.store_checkpoint(), store_bytes);
    fs::remove_all(dir);
}

TEST(Persistence, ThresholdChangesAreAudited) {
    const fs::path dir = scratch("threshold");
    ServiceConfig c = closing_config(0.0, 0);
    c.state_dir = dir;
    {
        TriageService service(c, constant_model(0.4));
        EXPECT_EQ(service.close_threshold(), 0.0);
        const ThresholdChange ch = service.set_close_threshold(0.3, "alice");
        EXPECT_EQ(ch.previous, 0.0);
        EXPECT_EQ(ch.current, 0.3);
        EXPECT_THROW(service.set_close_threshold(1.5), std::invalid_argument);
        EXPECT_EQ(service.score_alert(service_alert("a", "t", "r", 100)).disposition, "queued");
        ASSERT_EQ(service.threshold_audit().size(), 1u);
        EXPECT_EQ(service.threshold_audit()[0].actor, "alice");
    }
    {
        // The configured value wins on restart, and the reset is itself audited.
        TriageService service(c);
        EXPECT_EQ(service.close_threshold(), 0.0);
        const auto audit = service.threshold_audit();
        ASSERT_EQ(audit.size(), 2u);
        EXPECT_EQ(audit[1].previous, 0.3);
        EXPECT_EQ(audit[1].actor, "config");
    }
    fs::remove_all(dir);
}

TEST(Events, PublishesAndWakesListeners) {
    TriageService service(closing_config(0.0, 0), constant_model(0.7));
    const auto start = service.last_event();
    std::thread producer([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        service.score_alert(service_alert("a", "t", "r", 100));
    });
    const auto events = service.wait_events(start, std::chrono::milliseconds(2000));
    producer.join();
    ASSERT_FALSE(events.empty());
    EXPECT_GT(events.front().sequence, start);
    service.close_events();
    EXPECT_TRUE(service.events_closed());
    EXPECT_TRUE(service.wait_events(service.last_event(), std::chrono::milliseconds(5000)).empty());
}

TEST(Config, FromJsonKeepsDefaultsAndRejectsNonsense) {
    const ServiceConfig c = ServiceConfig::from_json({{"close_threshold", 0.25}, {"sample_budget", 12}, {"workflow", "ait"}});
    EXPECT_EQ(c.close_threshold, 0.25);
    EXPECT_EQ(c.sampler.budget, 12);
    EXPECT_EQ(c.features.workflow, Workflow::Ait);
    EXPECT_EQ(c.holdout_fraction, 0.2);
    EXPECT_THROW(ServiceConfig::from_json({{"close_threshold", 2.0}}), std::invalid_argument);
    EXPECT_THROW(ServiceConfig::from_json({{"workflow", "weird"}}), std::invalid_argument);
    const ServiceConfig back = ServiceConfig::from_json(c.to_json());
    EXPECT_EQ(back.to_json(), c.to_json());
}
