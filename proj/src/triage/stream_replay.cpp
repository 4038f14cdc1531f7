#include <queue>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "aact/errors.hpp"
#include "aact/triage.hpp"

namespace aact {

StreamReplayReport replay_stream(TriageService& service, const std::vector<Alert>& alerts,
                                 const StreamReplayOptions& options) {
    if (options.speed < 0) throw std::invalid_argument("replay speed must be >= 0");
    StreamReplayReport report;
    const auto wall_start = std::chrono::steady_clock::now();
    const Timestamp time_start = alerts.empty() ? 0.0 : alerts.front().created_at;
    auto pace = [&](Timestamp t) {
        if (options.speed <= 0) return;
        const auto due = wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                          std::chrono::duration<double>((t - time_start) / options.speed));
        std::this_thread::sleep_until(due);
    };

    using Pending = std::pair<Timestamp, std::size_t>;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;
    const LabelTarget target = service.config().target;
    std::size_t positives = 0, closed_positives = 0;

    auto deliver = [&](Timestamp until, bool all) {
        while (!pending.empty() && (all || pending.top().first <= until)) {
            const Alert& a = alerts[pending.top().second];
            pending.pop();
            pace(a.resolution->resolved_at);
            ResolutionEvent r = *a.resolution;
            r.alert_id = a.id;
            try {
                service.ingest_feedback(std::move(r));
                ++report.resolutions;
            } catch (const Error&) {
                ++report.rejected;
            }
        }
    };

    for (std::size_t i = 0; i < alerts.size(); ++i) {
        const Alert& a = alerts[i];
        if (i && a.created_at < alerts[i - 1].created_at) {
            throw std::invalid_argument("alerts must be sorted by creation time");
        }
        deliver(a.created_at, false);
        pace(a.created_at);
        ScoreResult result;
        try {
            result = service.score_alert(a);
        } catch (const Error&) {
            ++report.rejected;
            continue;
        }
        ++report.alerts;
        const bool closed = result.disposition == "auto-closed";
        const bool would_close = closed || result.entry.sampled_for_review;
        if (closed) {
            ++report.auto_closed;
        } else {
            ++report.queued;
        }
        if (a.resolution && result.entry.scored) {
            const int label = label_of(*a.resolution, target);
            positives += static_cast<std::size_t>(label);
            if (would_close) closed_positives += static_cast<std::size_t>(label);
        }
        if (!closed && a.resolution && options.deliver_resolutions) pending.emplace(a.resolution->resolved_at, i);
    }
    deliver(0.0, true);
    report.true_fnr = positives ? static_cast<double>(closed_positives) / static_cast<double>(positives) : 0.0;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return report;
}

}  // namespace aact
