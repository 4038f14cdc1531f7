#include <cmath>

#include "aact/triage.hpp"

namespace aact {

double threat_score(double probability) { return std::round(probability * 100.0) / 10.0; }

bool TriageQueue::Order::operator()(const QueueEntry& a, const QueueEntry& b) const {
    if (a.raw_probability != b.raw_probability) return a.raw_probability > b.raw_probability;
    if (a.enqueued_at != b.enqueued_at) return a.enqueued_at < b.enqueued_at;
    if (a.sequence != b.sequence) return a.sequence < b.sequence;
    return a.alert_id < b.alert_id;
}

void TriageQueue::push(QueueEntry entry) {
    erase(entry.alert_id);
    std::string id = entry.alert_id;
    const auto it = entries_.insert(std::move(entry)).first;
    index_.emplace(std::move(id), it);
}

bool TriageQueue::erase(std::string_view alert_id) {
    const auto it = index_.find(std::string(alert_id));
    if (it == index_.end()) return false;
    entries_.erase(it->second);
    index_.erase(it);
    return true;
}

const QueueEntry* TriageQueue::find(std::string_view alert_id) const {
    const auto it = index_.find(std::string(alert_id));
    return it == index_.end() ? nullptr : &*it->second;
}

std::vector<QueueEntry> TriageQueue::list(std::optional<std::string_view> tenant, std::size_t limit) const {
    std::vector<QueueEntry> out;
    for (const auto& e : entries_) {
        if (out.size() >= limit) break;
        if (tenant && e.tenant != *tenant) continue;
        out.push_back(e);
    }
    return out;
}

}  // namespace aact
