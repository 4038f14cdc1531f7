#include "aact/http_api.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <httplib.h>

#include "aact/alert_io.hpp"
#include "aact/errors.hpp"

namespace aact {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    reply(res, status, {{"error", kind}, {"message", message}});
}

// Maps library errors onto status codes so each handler stays linear.
template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const UnknownAlert& e) {
            fail(res, 404, "unknown_alert", e.what());
        } catch (const DuplicateAlert& e) {
            fail(res, 409, "duplicate_alert", e.what());
        } catch (const DuplicateResolution& e) {
            fail(res, 409, "duplicate_resolution", e.what());
        } catch (const ValidationRegression& e) {
            fail(res, 409, "validation_regression", e.what());
        } catch (const LatenessExceeded& e) {
            fail(res, 422, "lateness_exceeded", e.what());
        } catch (const EmptyData& e) {
            fail(res, 422, "not_enough_data", e.what());
        } catch (const DegenerateLabels& e) {
            fail(res, 422, "not_enough_data", e.what());
        } catch (const MissingField& e) {
            fail(res, 400, "missing_field", e.what());
        } catch (const MalformedRecord& e) {
            fail(res, 400, "malformed_record", e.what());
        } catch (const MalformedTimestamp& e) {
            fail(res, 400, "malformed_timestamp", e.what());
        } catch (const EmptyCategory& e) {
            fail(res, 400, "empty_category", e.what());
        } catch (const json::exception& e) {
            fail(res, 400, "malformed_body", e.what());
        } catch (const std::invalid_argument& e) {
            fail(res, 400, "invalid_argument", e.what());
        } catch (const std::exception& e) {
            fail(res, 500, "internal", e.what());
        }
    };
}

json parse_body(const httplib::Request& req) {
    json body = json::parse(req.body);
    if (!body.is_object()) throw std::invalid_argument("request body must be a JSON object");
    return body;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

json state_to_json(const AlertState& s) {
    json features = json::array();
    for (const auto& f : s.top_features) features.push_back(to_json(f));
    json out = {{"alert_id", s.alert.id},
                {"tenant", s.alert.tenant_id},
                {"category", s.alert.category.value},
                {"title", s.alert.title},
                {"created_at", s.alert.created_at},
                {"status", std::string(to_string(s.status))},
                {"scored", s.scored},
                {"raw_probability", s.raw_probability},
                {"threat_score", threat_score(s.raw_probability)},
                {"top_features", std::move(features)},
                {"sampled_for_review", s.sampled},
                {"model_version", s.model_version}};
    json entities = json::array();
    for (const auto& e : s.alert.entities) {
        entities.push_back({{"identifier", e.identifier}, {"kind", e.kind ? json(*e.kind) : json(nullptr)}});
    }
    out["entities"] = std::move(entities);
    out["resolution"] = s.resolution ? resolution_to_json(*s.resolution) : json(nullptr);
    return out;
}

json audit_to_json(const std::vector<ThresholdChange>& audit) {
    json out = json::array();
    for (const auto& c : audit) {
        out.push_back({{"previous", c.previous}, {"current", c.current}, {"actor", c.actor}, {"at", c.at}});
    }
    return out;
}

}  // namespace

struct HttpApi::Impl {
    TriageService& service;
    HttpOptions options;
    httplib::Server server;

    Impl(TriageService& s, HttpOptions o) : service(s), options(std::move(o)) { routes(); }

    void routes() {
        const std::size_t threads = std::max<std::size_t>(1, options.worker_threads);
        server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };

        server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
            if (!options.token || req.path == "/healthz") return httplib::Server::HandlerResponse::Unhandled;
            if (req.get_header_value("Authorization") == "Bearer " + *options.token) {
                return httplib::Server::HandlerResponse::Unhandled;
            }
            fail(res, 401, "unauthorized", "missing or wrong bearer token");
            return httplib::Server::HandlerResponse::Handled;
        });

        server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"ok", true}}); });

        server.Post("/v1/alerts", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        Alert alert = parse_alert(std::string_view(req.body));
                        const ScoreResult r = service.score_alert(std::move(alert));
                        json body = to_json(r.entry);
                        body["disposition"] = r.disposition;
                        body["fail_open"] = r.fail_open ? json(*r.fail_open) : json(nullptr);
                        reply(res, 201, body);
                    }));

        server.Get("/v1/queue", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       std::size_t limit = 100;
                       if (req.has_param("limit")) {
                           const std::string text = req.get_param_value("limit");
                           const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), limit);
                           if (ec != std::errc{} || ptr != text.data() + text.size()) {
                               throw std::invalid_argument("limit must be a non-negative integer");
                           }
                       }
                       limit = std::min(limit, options.max_page);
                       std::optional<std::string> tenant;
                       if (req.has_param("tenant") && !req.get_param_value("tenant").empty()) {
                           tenant = req.get_param_value("tenant");
                       }
                       json entries = json::array();
                       for (const auto& e : service.queue_listing(tenant, limit)) entries.push_back(to_json(e));
                       reply(res, 200, {{"entries", std::move(entries)}, {"depth", service.metrics().queue_depth}});
                   }));

        server.Get("/v1/queue/stream", [this](const httplib::Request& req, httplib::Response& res) {
            auto last = std::make_shared<std::uint64_t>(service.last_event());
            auto sent_snapshot = std::make_shared<bool>(false);
            std::optional<std::string> tenant;
            if (req.has_param("tenant") && !req.get_param_value("tenant").empty()) {
                tenant = req.get_param_value("tenant");
            }
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "text/event-stream", [this, last, sent_snapshot, tenant](std::size_t, httplib::DataSink& sink) {
                    if (!*sent_snapshot) {
                        json entries = json::array();
                        for (const auto& e : service.queue_listing(tenant, options.max_page)) {
                            entries.push_back(to_json(e));
                        }
                        const std::string msg = "id: " + std::to_string(*last) + "\nevent: snapshot\ndata: " +
                                                json{{"entries", entries}}.dump() + "\n\n";
                        *sent_snapshot = true;
                        return sink.write(msg.data(), msg.size());
                    }
                    if (service.events_closed()) {
                        sink.done();
                        return false;
                    }
                    const auto events = service.wait_events(*last, std::chrono::milliseconds(1000));
                    std::string msg;
                    for (const auto& e : events) {
                        *last = std::max(*last, e.sequence);
                        if (tenant && e.payload.contains("entry") && e.payload["entry"].value("tenant", "") != *tenant) {
                            continue;
                        }
                        msg += "id: " + std::to_string(e.sequence) + "\nevent: " +
                               e.payload.value("type", std::string("message")) + "\ndata: " + e.payload.dump() + "\n\n";
                    }
                    if (msg.empty()) msg = ": keepalive\n\n";
                    return sink.write(msg.data(), msg.size());
                });
        });

        server.Get("/v1/alerts/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto id = req.path_params.at("id");
                       const auto state = service.alert_state(id);
                       if (!state) throw UnknownAlert("no alert " + id);
                       reply(res, 200, state_to_json(*state));
                   }));

        server.Post("/v1/alerts/:id/resolution", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto id = req.path_params.at("id");
                        json body = parse_body(req);
                        const auto state = service.alert_state(id);
                        if (!state) throw UnknownAlert("no alert " + id);
                        if (body.contains("action") && body["action"].is_string()) {
                            body["action"] = lower(body["action"].get<std::string>());
                        }
                        if (body.contains("label") && body["label"].is_string()) {
                            body["label"] = lower(body["label"].get<std::string>());
                        }
                        if (!body.contains("resolved_at")) {
                            // Event time never runs backwards: default to the
                            // newest event the service has seen.
                            body["resolved_at"] = std::max(service.metrics().watermark, state->alert.created_at);
                        }
                        body["alert_id"] = id;
                        ResolutionEvent r = resolution_from_json(body);
                        service.ingest_feedback(r);
                        reply(res, 200, {{"alert_id", id}, {"status", "resolved"}, {"resolution", resolution_to_json(r)}});
                    }));

        server.Get("/v1/metrics", guarded([this](const httplib::Request&, httplib::Response& res) {
                       reply(res, 200, to_json(service.metrics()));
                   }));

        server.Get("/v1/config/threshold", guarded([this](const httplib::Request&, httplib::Response& res) {
                       reply(res, 200,
                             {{"close_threshold", service.close_threshold()},
                              {"audit", audit_to_json(service.threshold_audit())}});
                   }));

        server.Put("/v1/config/threshold", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const json body = parse_body(req);
                       if (!body.contains("close_threshold") || !body["close_threshold"].is_number()) {
                           throw MissingField("close_threshold");
                       }
                       const auto change =
                           service.set_close_threshold(body["close_threshold"].get<double>(), body.value("actor", "api"));
                       reply(res, 200,
                             {{"close_threshold", change.current},
                              {"previous", change.previous},
                              {"actor", change.actor},
                              {"at", change.at}});
                   }));

        server.Post("/v1/model/retrain", guarded([this](const httplib::Request&, httplib::Response& res) {
                        service.retrain();
                        reply(res, 200, {{"model_version", service.model_version()}});
                    }));
    }
};

HttpApi::HttpApi(TriageService& service, HttpOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

HttpApi::~HttpApi() { stop(); }

bool HttpApi::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpApi::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpApi::run() { return impl_->server.listen_after_bind(); }

void HttpApi::stop() {
    if (impl_->server.is_running()) {
        impl_->service.close_events();
        impl_->server.stop();
    }
}

bool HttpApi::is_running() const { return impl_->server.is_running(); }

}  // namespace aact
