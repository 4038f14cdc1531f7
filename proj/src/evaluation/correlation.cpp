#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "aact/errors.hpp"
#include "aact/evaluation.hpp"

namespace aact {

CorrelationReport pearson_matrix(std::vector<std::string> names, const std::vector<std::vector<double>>& columns) {
    if (names.size() != columns.size()) throw LengthMismatch("column names and columns differ in count");
    if (columns.empty() || columns.front().empty()) throw EmptyInput("correlation over no data");
    const std::size_t m = columns.size(), n = columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != n) throw LengthMismatch("columns differ in length");
    }

    // Centre each column once; a column with no spread is reported as
    // constant and correlates 0 with everything, itself included.
    std::vector<std::vector<double>> centred(m);
    std::vector<double> norm(m);
    CorrelationReport report;
    for (std::size_t j = 0; j < m; ++j) {
        double mean = 0.0;
        for (double x : columns[j]) mean += x;
        mean /= static_cast<double>(n);
        centred[j].resize(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            centred[j][i] = columns[j][i] - mean;
            ss += centred[j][i] * centred[j][i];
        }
        norm[j] = std::sqrt(ss);
        if (!(norm[j] > 0)) report.constant_columns.push_back(names[j]);
    }
    report.matrix.assign(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a; b < m; ++b) {
            double r = 0.0;
            if (norm[a] > 0 && norm[b] > 0) {
                if (a == b) {
                    r = 1.0;
                } else {
                    double dot = 0.0;
                    for (std::size_t i = 0; i < n; ++i) dot += centred[a][i] * centred[b][i];
                    r = std::clamp(dot / (norm[a] * norm[b]), -1.0, 1.0);
                }
            }
            report.matrix[a * m + b] = report.matrix[b * m + a] = r;
        }
    }
    report.names = std::move(names);
    return report;
}

CorrelationReport window_correlation_report(const FeatureTable& dump, std::span<const std::string> columns) {
    if (dump.rows.empty()) throw EmptyInput("feature dump has no rows");
    std::vector<std::size_t> slots;
    std::vector<std::string> names;
    if (columns.empty()) {
        for (std::size_t j = 0; j < dump.feature_names.size(); ++j) slots.push_back(j);
        names = dump.feature_names;
    } else {
        for (const auto& c : columns) {
            const auto it = std::find(dump.feature_names.begin(), dump.feature_names.end(), c);
            if (it == dump.feature_names.end()) throw std::invalid_argument("unknown feature column '" + c + "'");
            slots.push_back(static_cast<std::size_t>(it - dump.feature_names.begin()));
            names.push_back(c);
        }
    }
    std::vector<std::vector<double>> data(slots.size() + 1);
    for (const auto& row : dump.rows) {
        for (std::size_t k = 0; k < slots.size(); ++k) data[k].push_back(row.features.at(slots[k]));
        data.back().push_back(row.label);
    }
    names.emplace_back("label");
    return pearson_matrix(std::move(names), data);
}

void write_correlation_table(std::ostream& out, const CorrelationReport& report) {
    out << "feature";
    for (const auto& name : report.names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < report.names.size(); ++i) {
        out << report.names[i];
        for (std::size_t j = 0; j < report.names.size(); ++j) out << ',' << format_number(report.at(i, j));
        out << '\n';
    }
    for (const auto& c : report.constant_columns) out << "# constant column: " << c << '\n';
}

}  // namespace aact
