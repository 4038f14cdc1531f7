#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "aact/features.hpp"

namespace aact {

/// One featurized alert as written to a feature dump.
struct FeatureRow {
    std::string alert_id;
    std::string tenant;
    Timestamp timestamp = 0.0;
    int label = 0;
    FeatureVector features;
};

struct FeatureTable {
    std::vector<std::string> feature_names;
    std::vector<FeatureRow> rows;
};

/// Comma-separated text with header `alert_id,tenant,timestamp,label,<slots>`.
/// Numbers use the shortest representation that round-trips exactly.
void write_feature_dump(std::ostream& out, const FeatureTable& table);
FeatureTable read_feature_dump(std::istream& in);

/// Shortest round-trip decimal form of a double.
std::string format_number(double value);

}  // namespace aact
