#include "aact/feature_dump.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "aact/errors.hpp"

namespace aact {

namespace {

constexpr std::size_t kFixedColumns = 4;

void write_field(std::ostream& out, const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) {
        out << field;
        return;
    }
    out << '"';
    for (char c : field) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                current.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

double parse_number(const std::string& text) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw MalformedRecord("not a number in feature dump: " + text);
    }
    return v;
}

}  // namespace

std::string format_number(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

void write_feature_dump(std::ostream& out, const FeatureTable& table) {
    out << "alert_id,tenant,timestamp,label";
    for (const auto& name : table.feature_names) out << ',' << name;
    out << '\n';
    for (const auto& row : table.rows) {
        if (row.features.size() != table.feature_names.size()) {
            throw DimensionMismatch("feature row " + row.alert_id + " has the wrong width");
        }
        write_field(out, row.alert_id);
        out << ',';
        write_field(out, row.tenant);
        out << ',' << format_number(row.timestamp) << ',' << row.label;
        for (double v : row.features) out << ',' << format_number(v);
        out << '\n';
    }
}

FeatureTable read_feature_dump(std::istream& in) {
    FeatureTable table;
    std::string line;
    if (!std::getline(in, line)) throw EmptyInput("feature dump is empty");
    auto header = split_csv_line(line);
    if (header.size() < kFixedColumns || header[0] != "alert_id" || header[3] != "label") {
        throw MalformedRecord("feature dump header is malformed");
    }
    table.feature_names.assign(header.begin() + kFixedColumns, header.end());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw MalformedRecord("feature dump line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields");
        }
        FeatureRow row;
        row.alert_id = std::move(fields[0]);
        row.tenant = std::move(fields[1]);
        row.timestamp = parse_number(fields[2]);
        row.label = static_cast<int>(parse_number(fields[3]));
        if (row.label != 0 && row.label != 1) throw MalformedRecord("label must be 0 or 1");
        row.features.reserve(fields.size() - kFixedColumns);
        for (std::size_t i = kFixedColumns; i < fields.size(); ++i) {
            row.features.push_back(parse_number(fields[i]));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace aact
