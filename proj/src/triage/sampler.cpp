#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "aact/random.hpp"
#include "aact/triage.hpp"

namespace aact {

namespace {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

Sampler::Sampler(SamplerConfig config) : config_(config) {
    if (!(config_.period > 0)) throw std::invalid_argument("sampling period must be positive");
    if (config_.budget && *config_.budget < 0) throw std::invalid_argument("sampling budget must be >= 0");
    if (!(config_.fraction >= 0) || config_.floor < 0) throw std::invalid_argument("invalid sampling budget rule");
}

void Sampler::advance(Timestamp t) {
    const auto p = static_cast<std::int64_t>(std::floor(t / config_.period));
    if (p <= period_) return;
    previous_.clear();
    if (period_ != std::numeric_limits<std::int64_t>::min() && p == period_ + 1) {
        for (auto it = strata_.lower_bound({period_, std::string{}}); it != strata_.end() && it->first.first == period_;
             ++it) {
            if (it->second.closed > 0) previous_.emplace(it->first.second, it->second.closed);
        }
    }
    std::int64_t volume = 0;
    for (const auto& [c, n] : previous_) volume += n;
    budget_ = config_.budget ? *config_.budget
                             : std::max(config_.floor,
                                        static_cast<std::int64_t>(std::ceil(config_.fraction * static_cast<double>(volume))));
    sampled_total_ = 0;
    period_ = p;
    expected_.clear();
    rank_.clear();
    for (const auto& [c, n] : previous_) {
        rank_.emplace(c, static_cast<std::int64_t>(expected_.size()));
        expected_.push_back(c);
    }
}

std::int64_t Sampler::category_rank(std::string_view category) const {
    const auto it = rank_.find(category);
    return it == rank_.end() ? -1 : it->second;
}

std::int64_t Sampler::quota(std::string_view category) const {
    const auto k = static_cast<std::int64_t>(expected_.size());
    const std::int64_t rank = category_rank(category);
    if (k == 0 || rank < 0) return budget_;
    // Rotate the remainder so no category is favoured every period.
    const std::int64_t rotated = ((rank + period_) % k + k) % k;
    return budget_ / k + (rotated < budget_ % k ? 1 : 0);
}

double Sampler::stride_offset(const std::string& category) const {
    std::mt19937_64 rng(config_.seed ^ fnv1a(category) ^ (static_cast<std::uint64_t>(period_) * 0x9E3779B97F4A7C15ULL));
    return unit_uniform(rng);
}

bool Sampler::decide(std::string_view category, Timestamp t) {
    advance(t);
    const std::string key(category);
    if (category_rank(key) < 0) {
        rank_.emplace(key, static_cast<std::int64_t>(expected_.size()));
        expected_.push_back(key);
    }
    Stratum& s = strata_[{period_, key}];
    const std::int64_t j = s.closed++;
    const std::int64_t q = quota(key);
    if (q <= 0 || s.sampled >= q || sampled_total_ >= budget_) return false;

    bool hit = true;
    const auto prev = previous_.find(key);
    if (prev != previous_.end()) {
        // Picks at offset + m * stride spread the quota over last period's
        // volume; the j-th alert is picked when one of them lands in [j, j+1).
        const double stride = static_cast<double>(prev->second) / static_cast<double>(q);
        const double offset = stride_offset(key) * stride;
        const double m = std::ceil((static_cast<double>(j) - offset) / stride);
        hit = m >= 0 && offset + m * stride < static_cast<double>(j + 1);
        if (stride < 1.0) hit = true;
    }
    if (hit) {
        ++s.sampled;
        ++sampled_total_;
    }
    return hit;
}

void Sampler::restore(std::string_view category, Timestamp t, bool sampled) {
    advance(t);
    const std::string key(category);
    if (category_rank(key) < 0) {
        rank_.emplace(key, static_cast<std::int64_t>(expected_.size()));
        expected_.push_back(key);
    }
    Stratum& s = strata_[{period_, key}];
    ++s.closed;
    if (sampled) {
        ++s.sampled;
        ++sampled_total_;
    }
}

void Sampler::record_outcome(std::string_view category, Timestamp created_at, bool positive) {
    const auto p = static_cast<std::int64_t>(std::floor(created_at / config_.period));
    auto it = strata_.find({std::min(p, period_), std::string(category)});
    if (it == strata_.end()) return;
    ++it->second.resolved;
    if (positive) ++it->second.positive;
}

std::int64_t Sampler::sampled_in_period(std::string_view category) const {
    const auto it = strata_.find({period_, std::string(category)});
    return it == strata_.end() ? 0 : it->second.sampled;
}

double Sampler::estimated_false_negatives() const {
    // Strata with a resolved sample use their own positive rate. A budget
    // smaller than the number of categories leaves most strata unsampled in
    // any one period; those borrow the category's rate pooled over periods,
    // or failing that the rate over every resolved sample. Dropping them
    // instead would bias the estimate towards zero.
    std::map<std::string, std::pair<std::int64_t, std::int64_t>, std::less<>> pooled;
    std::int64_t all_positive = 0, all_resolved = 0;
    for (const auto& [key, s] : strata_) {
        auto& [positive, resolved] = pooled[key.second];
        positive += s.positive;
        resolved += s.resolved;
        all_positive += s.positive;
        all_resolved += s.resolved;
    }
    double total = 0.0;
    for (const auto& [key, s] : strata_) {
        double rate = 0.0;
        if (s.resolved > 0) {
            rate = static_cast<double>(s.positive) / static_cast<double>(s.resolved);
        } else if (const auto& [positive, resolved] = pooled[key.second]; resolved > 0) {
            rate = static_cast<double>(positive) / static_cast<double>(resolved);
        } else if (all_resolved > 0) {
            rate = static_cast<double>(all_positive) / static_cast<double>(all_resolved);
        }
        total += static_cast<double>(s.closed) * rate;
    }
    return total;
}

}  // namespace aact
