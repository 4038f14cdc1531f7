#pragma once

#include <string>
#include <vector>

#include "aact/alert.hpp"
#include "aact/feature_store.hpp"

namespace aact {

using FeatureVector = std::vector<double>;

enum class Workflow : std::uint8_t {
    /// Investigation and malicious-label rates over several windows, resolved
    /// ratios, totals, recency and static alert features.
    Full,
    /// Label-only workflow over a single short window, no static features.
    Ait,
};

std::string_view to_string(Workflow workflow);
std::optional<Workflow> parse_workflow(std::string_view text);

struct WindowSpec {
    /// Lookback windows for the action rates, strictly increasing.
    std::vector<Duration> deltas{kDay, 7 * kDay, 30 * kDay};
    /// Windows for the resolved-ratio and total-count slots.
    std::vector<Duration> short_only{kDay};

    /// Throws std::invalid_argument unless both lists are nonempty and
    /// strictly increasing.
    void validate() const;
};

struct FeatureConfig {
    Workflow workflow = Workflow::Full;
    WindowSpec windows;
    /// Recency value for keys never seen before (left-censoring cap).
    Duration recency_cap = 30 * kDay;
    EntitySummary entity_summary = EntitySummary::Max;

    static FeatureConfig full();
    static FeatureConfig ait();

    /// Retention a compacting store needs so that every slot stays exact.
    Duration required_retention() const;
};

/// Slot names in vector order.
std::vector<std::string> feature_names(const FeatureConfig& config);

/// Index of the slot the baseline reads: the global 30-day category
/// investigation rate for the full workflow, the global category malicious
/// rate for the label-only workflow.
std::size_t baseline_slot(const FeatureConfig& config);

/// Builds the fixed-order vector for an alert scored at time t. Every dynamic
/// slot comes from events strictly before t, read under one consistent store
/// snapshot.
class FeatureAssembler {
public:
    explicit FeatureAssembler(FeatureConfig config);

    const FeatureConfig& config() const noexcept { return config_; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t size() const noexcept { return names_.size(); }

    FeatureVector assemble(const ActionCountStore& store, const Alert& alert, Timestamp t) const;
    FeatureVector assemble(const ActionCountStore& store, const Alert& alert) const {
        return assemble(store, alert, alert.created_at);
    }

private:
    FeatureConfig config_;
    std::vector<std::string> names_;
};

FeatureVector assemble_feature_vector(const ActionCountStore& store, const Alert& alert, Timestamp t,
                                      const FeatureConfig& config);

}  // namespace aact
