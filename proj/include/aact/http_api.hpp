#pragma once

#include <memory>
#include <optional>
#include <string>

#include "aact/triage.hpp"

namespace aact {

struct HttpOptions {
    /// When set, every request must carry "Authorization: Bearer <token>".
    std::optional<std::string> token;
    /// Largest accepted `limit` on queue listings.
    std::size_t max_page = 10000;
    std::size_t worker_threads = 8;
};

/// JSON-over-HTTP front end for a TriageService.
///
///   POST /v1/alerts                      submit an alert; returns disposition and score
///   GET  /v1/queue?tenant=&limit=        queued entries in priority order
///   GET  /v1/queue/stream                server-sent queue events
///   GET  /v1/alerts/{id}                 score, top features and status
///   POST /v1/alerts/{id}/resolution      {"action", "label", "resolved_at"?, "analyst_id"?}
///   GET  /v1/metrics                     reduction, sampled FNR, latency, queue depth
///   GET  /v1/config/threshold            current close threshold and its audit trail
///   PUT  /v1/config/threshold            {"close_threshold", "actor"?}
///   POST /v1/model/retrain               retrain from the human-labelled history
///   GET  /healthz
class HttpApi {
public:
    HttpApi(TriageService& service, HttpOptions options = {});
    ~HttpApi();

    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    /// Binds and serves until stop(); returns false if binding failed.
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and returns it (or -1); serve with run().
    int bind_any_port(const std::string& host);
    bool run();
    void stop();
    bool is_running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace aact
