#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "aact/alert_io.hpp"
#include "aact/http_api.hpp"
#include "service_fixture.hpp"

using namespace aact;
using namespace aact::fixture;
using nlohmann::json;

namespace {

constexpr const char* kToken = "s3cret";

// Probability rises with the tenant's one-day category investigation rate.
ModelArtifact rate_model() {
    const auto names = feature_names(FeatureConfig::full());
    LogisticModel lm;
    lm.bias = -1.0;
    lm.weights.assign(names.size(), 0.0);
    lm.means.assign(names.size(), 0.0);
    lm.scales.assign(names.size(), 1.0);
    lm.weights[full_slot("tenant_category_investigation_rate_1d")] = 3.0;
    ModelArtifact m;
    m.feature_names = names;
    m.model = lm;
    return m;
}

class Api : public ::testing::Test {
protected:
    void SetUp() override {
        ServiceConfig c;
        c.close_threshold = 0.0;
        c.checkpoint_interval = 0;
        c.sampler.budget = 0;
        service = std::make_unique<TriageService>(c, rate_model());
        HttpOptions o;
        o.token = kToken;
        o.worker_threads = 4;
        api = std::make_unique<HttpApi>(*service, o);
        port = api->bind_any_port("127.0.0.1");
        ASSERT_GT(port, 0);
        server = std::thread([this] { api->run(); });
        client = make_client();
    }

    void TearDown() override {
        api->stop();
        server.join();
    }

    std::unique_ptr<httplib::Client> make_client() const {
        auto c = std::make_unique<httplib::Client>("127.0.0.1", port);
        c->set_bearer_token_auth(kToken);
        c->set_read_timeout(10, 0);
        return c;
    }

    httplib::Result post_alert(const Alert& a) {
        return client->Post("/v1/alerts", alert_to_json(a).dump(), "application/json");
    }

    httplib::Result resolve(const std::string& id, const json& body) {
        return client->Post("/v1/alerts/" + id + "/resolution", body.dump(), "application/json");
    }

    std::unique_ptr<TriageService> service;
    std::unique_ptr<HttpApi> api;
    std::unique_ptr<httplib::Client> client;
    std::thread server;
    int port = -1;
};

json body_of(const httplib::Result& r) { return json::parse(r->body); }

}  // namespace

TEST_F(Api, HealthNeedsNoToken) {
    httplib::Client anon("127.0.0.1", port);
    const auto r = anon.Get("/healthz");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
}

TEST_F(Api, RejectsMissingOrWrongToken) {
    httplib::Client anon("127.0.0.1", port);
    const auto none = anon.Get("/v1/queue");
    ASSERT_TRUE(none);
    EXPECT_EQ(none->status, 401);
    anon.set_bearer_token_auth("wrong");
    EXPECT_EQ(anon.Get("/v1/metrics")->status, 401);
    EXPECT_EQ(anon.Post("/v1/alerts", "{}", "application/json")->status, 401);
}

TEST_F(Api, SubmitListInspectResolve) {
    const auto r = post_alert(service_alert("a1", "t1", "r", 1000));
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 201) << r->body;
    const json created = body_of(r);
    EXPECT_EQ(created["disposition"], "queued");
    EXPECT_EQ(created["alert_id"], "a1");
    EXPECT_TRUE(created["fail_open"].is_null());
    EXPECT_EQ(created["threat_score"].get<double>(), threat_score(created["raw_probability"].get<double>()));

    post_alert(service_alert("b1", "t2", "r", 1010));
    const json queue = body_of(client->Get("/v1/queue"));
    EXPECT_EQ(queue["depth"], 2);
    ASSERT_EQ(queue["entries"].size(), 2u);
    const json t2 = body_of(client->Get("/v1/queue?tenant=t2"));
    ASSERT_EQ(t2["entries"].size(), 1u);
    EXPECT_EQ(t2["entries"][0]["alert_id"], "b1");
    EXPECT_EQ(body_of(client->Get("/v1/queue?limit=1"))["entries"].size(), 1u);

    const json detail = body_of(client->Get("/v1/alerts/a1"));
    EXPECT_EQ(detail["status"], "queued");
    EXPECT_EQ(detail["tenant"], "t1");
    EXPECT_TRUE(detail["resolution"].is_null());

    const auto res = resolve("a1", {{"action", "Investigated"}, {"label", "Malicious"}, {"resolved_at", 1100}});
    ASSERT_EQ(res->status, 200) << res->body;
    EXPECT_EQ(body_of(res)["status"], "resolved");
    EXPECT_EQ(body_of(client->Get("/v1/alerts/a1"))["status"], "resolved");
    EXPECT_EQ(body_of(client->Get("/v1/queue"))["entries"].size(), 1u);
}

TEST_F(Api, InvestigationRaisesLaterScores) {
    const double before = body_of(post_alert(service_alert("a1", "t", "r", 1000)))["raw_probability"];
    ASSERT_EQ(resolve("a1", {{"action", "investigated"}, {"resolved_at", 1050}})->status, 200);
    const double after = body_of(post_alert(service_alert("a2", "t", "r", 1100)))["raw_probability"];
    EXPECT_GT(after, before);
}

TEST_F(Api, ErrorStatuses) {
    EXPECT_EQ(client->Get("/v1/alerts/ghost")->status, 404);
    EXPECT_EQ(resolve("ghost", {{"action", "investigated"}})->status, 404);

    post_alert(service_alert("a1", "t", "r", 1000));
    const auto dup = post_alert(service_alert("a1", "t", "r", 1000));
    EXPECT_EQ(dup->status, 409);
    EXPECT_EQ(body_of(dup)["error"], "duplicate_alert");
    ASSERT_EQ(resolve("a1", {{"action", "not_investigated"}})->status, 200);
    EXPECT_EQ(resolve("a1", {{"action", "not_investigated"}})->status, 409);

    EXPECT_EQ(client->Post("/v1/alerts", "{not json", "application/json")->status, 400);
    json missing = alert_to_json(service_alert("a2", "t", "r", 1000));
    missing.erase("tenant_id");
    EXPECT_EQ(client->Post("/v1/alerts", missing.dump(), "application/json")->status, 400);
    post_alert(service_alert("a3", "t", "r", 1000));
    EXPECT_EQ(resolve("a3", {{"action", "dance"}})->status, 400);
    EXPECT_EQ(client->Get("/v1/queue?limit=-3")->status, 400);
    EXPECT_EQ(client->Put("/v1/config/threshold", json{{"close_threshold", 3}}.dump(), "application/json")->status,
              400);
    EXPECT_EQ(client->Put("/v1/config/threshold", "{}", "application/json")->status, 400);

    // Not enough human labels to train on.
    EXPECT_EQ(client->Post("/v1/model/retrain", "", "application/json")->status, 422);
}

TEST_F(Api, ThresholdRoundTripIsAudited) {
    const json initial = body_of(client->Get("/v1/config/threshold"));
    EXPECT_EQ(initial["close_threshold"], 0.0);
    EXPECT_TRUE(initial["audit"].empty());
    const auto put = client->Put("/v1/config/threshold", json{{"close_threshold", 0.4}, {"actor", "lead"}}.dump(),
                                 "application/json");
    ASSERT_EQ(put->status, 200) << put->body;
    EXPECT_EQ(body_of(put)["previous"], 0.0);
    const json now = body_of(client->Get("/v1/config/threshold"));
    EXPECT_EQ(now["close_threshold"], 0.4);
    ASSERT_EQ(now["audit"].size(), 1u);
    EXPECT_EQ(now["audit"][0]["actor"], "lead");
    // With nothing investigated yet the model scores 0.27, below the new threshold.
    EXPECT_EQ(body_of(post_alert(service_alert("c", "t", "r", 1000)))["disposition"], "auto-closed");
}

TEST_F(Api, MetricsReportCounters) {
    post_alert(service_alert("a1", "t", "r", 1000));
    post_alert(service_alert("a2", "t", "r", 1001));
    resolve("a1", {{"action", "investigated"}, {"resolved_at", 1002}});
    const json m = body_of(client->Get("/v1/metrics"));
    EXPECT_EQ(m["alerts"], 2);
    EXPECT_EQ(m["resolved"], 1);
    EXPECT_EQ(m["queue_depth"], 1);
    EXPECT_EQ(m["latency_ms"]["samples"], 2);
    EXPECT_TRUE(m.contains("sampled_fnr"));
    EXPECT_TRUE(m.contains("alert_reduction"));
}

TEST_F(Api, RetrainSwapsTheModel) {
    Timestamp t = 1e6;
    for (int i = 0; i < 200; ++i, t += 60) {
        const std::string id = "h" + std::to_string(i);
        ASSERT_EQ(post_alert(service_alert(id, "t", "r" + std::to_string(i % 2), t, i % 2 ? 9 : 2))->status, 201);
        resolve(id, {{"action", i % 2 ? "investigated" : "not_investigated"}, {"resolved_at", t + 30}});
    }
    const auto before = service->model_version();
    const auto r = client->Post("/v1/model/retrain", "", "application/json");
    ASSERT_EQ(r->status, 200) << r->body;
    EXPECT_EQ(body_of(r)["model_version"], before + 1);
}

TEST_F(Api, StreamSendsSnapshotThenEvents) {
    post_alert(service_alert("old", "t", "r", 1000));
    std::atomic<bool> snapshot{false};
    std::string received;
    std::thread listener([&] {
        auto c = make_client();
        c->Get("/v1/queue/stream", [&](const char* data, std::size_t n) {
            received.append(data, n);
            if (received.find("event: snapshot") != std::string::npos) snapshot = true;
            return received.find("event: enqueued") == std::string::npos;
        });
    });
    for (int i = 0; i < 500 && !snapshot; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    ASSERT_TRUE(snapshot);
    post_alert(service_alert("new", "t", "r", 1001));
    listener.join();
    const auto snap = received.find("event: snapshot");
    const auto enq = received.find("event: enqueued");
    ASSERT_NE(enq, std::string::npos);
    EXPECT_LT(snap, enq);
    EXPECT_NE(received.find("\"old\"", snap), std::string::npos);
    EXPECT_NE(received.find("\"new\"", enq), std::string::npos);
}
