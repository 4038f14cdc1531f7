#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "aact/alert_io.hpp"
#include "aact/errors.hpp"
#include "aact/pipeline.hpp"
#include "aact/random.hpp"

namespace aact {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t AitDataset::category_count() const {
    std::set<std::string_view> seen;
    for (const auto& a : alerts) seen.insert(a.category.value);
    return seen.size();
}

std::size_t AitDataset::tenant_count() const {
    std::set<std::string_view> seen;
    for (const auto& a : alerts) seen.insert(a.tenant_id);
    return seen.size();
}

namespace {

std::string tenant_from_path(const fs::path& path) {
    const std::string name = path.filename().string();
    return name.substr(0, name.find_first_of("_."));
}

bool is_alert_file(const fs::path& path) {
    const auto ext = path.extension().string();
    return ext == ".json" || ext == ".jsonl";
}

struct Parsed {
    AitRecord record;
    std::size_t sequence = 0;
};

void parse_file(const fs::path& path, std::vector<Parsed>& out, std::unordered_set<std::string>& ids,
                std::size_t& malformed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    const std::string tenant = tenant_from_path(path);
    const std::string stem = path.stem().string();

    auto take = [&](const json& j, std::size_t index) {
        try {
            AitRecord r = parse_ait_record(j, tenant, stem + ":" + std::to_string(index));
            if (!ids.insert(r.alert.id).second) {
                ++malformed;
                return;
            }
            out.push_back({std::move(r), out.size()});
        } catch (const Error&) {
            ++malformed;
        } catch (const json::exception&) {
            ++malformed;
        }
    };

    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        try {
            const json all = json::parse(text);
            for (std::size_t i = 0; i < all.size(); ++i) take(all[i], i + 1);
        } catch (const json::exception&) {
            ++malformed;
        }
        return;
    }
    std::istringstream lines(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception&) {
            ++malformed;
            continue;
        }
        take(j, lineno);
    }
}

}  // namespace

AitDataset ingest_ait(const fs::path& root, const AitIngestOptions& options) {
    std::vector<fs::path> files;
    if (fs::is_regular_file(root)) {
        files.push_back(root);
    } else if (fs::is_directory(root)) {
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
            if (entry.is_regular_file() && is_alert_file(entry.path())) files.push_back(entry.path());
        }
    } else {
        throw std::runtime_error("AIT data not found at " + root.string());
    }
    std::sort(files.begin(), files.end());
    return ingest_ait(files, options);
}

AitDataset ingest_ait(const std::vector<fs::path>& files, const AitIngestOptions& options) {
    if (!(options.jitter_min >= 0) || !(options.jitter_max >= options.jitter_min)) {
        throw std::invalid_argument("invalid labelling delay range");
    }
    if (!(options.subsample > 0) || options.subsample > 1) {
        throw std::invalid_argument("subsample fraction must lie in (0, 1]");
    }
    AitDataset out;
    out.files = files.size();
    std::vector<Parsed> parsed;
    std::unordered_set<std::string> ids;
    for (const auto& f : files) parse_file(f, parsed, ids, out.malformed);

    std::stable_sort(parsed.begin(), parsed.end(), [](const Parsed& a, const Parsed& b) {
        return a.record.alert.created_at < b.record.alert.created_at;
    });

    std::mt19937_64 keep_rng(options.subsample_seed);
    std::mt19937_64 jitter_rng(options.jitter_seed);
    out.alerts.reserve(parsed.size());
    out.labels.reserve(parsed.size());
    for (auto& p : parsed) {
        if (options.subsample < 1.0 && !(unit_uniform(keep_rng) < options.subsample)) continue;
        Alert& alert = p.record.alert;
        ResolutionEvent r;
        r.alert_id = alert.id;
        r.action = p.record.malicious ? ActionKind::Investigated : ActionKind::NotInvestigated;
        r.label = p.record.malicious ? LabelKind::Malicious : LabelKind::Benign;
        r.resolved_at = alert.created_at + uniform_real(jitter_rng, options.jitter_min, options.jitter_max);
        alert.resolution = std::move(r);
        out.labels.push_back(p.record.malicious ? 1 : 0);
        out.alerts.push_back(std::move(alert));
    }
    return out;
}

std::vector<fs::path> write_synthetic_ait(const fs::path& dir, const SyntheticAitOptions& o) {
    static const char* kTestbeds[] = {"fox",   "harrison", "russellmitchell", "santos",
                                      "shaw",  "wardbeck", "wheeler",         "wilson"};
    static const char* kDetectors[] = {"Wazuh", "Suricata", "AMiner"};
    if (o.testbeds < 1 || o.testbeds > 8 || o.categories < 2 || o.hosts_per_testbed < 1) {
        throw std::invalid_argument("invalid synthetic corpus shape");
    }
    fs::create_directories(dir);
    std::mt19937_64 rng(o.seed);
    const Timestamp start = 1642118400.0;  // 2022-01-14T00:00:00Z

    std::vector<std::string> categories;
    for (int c = 0; c < o.categories; ++c) {
        categories.push_back(std::string(kDetectors[c % 3]) + ": rule " + std::to_string(1000 + 7 * c));
    }
    // A third of the categories are raised by attack steps; every category
    // also fires in background traffic with a skewed frequency.
    const int attack_categories = std::max(1, o.categories / 3);
    std::vector<double> bg_weight(static_cast<std::size_t>(o.categories));
    for (int c = 0; c < o.categories; ++c) bg_weight[static_cast<std::size_t>(c)] = 1.0 / (1.0 + c % 11);
    double bg_total = 0.0;
    for (double w : bg_weight) bg_total += w;
    auto pick_background = [&] {
        double u = unit_uniform(rng) * bg_total;
        for (int c = 0; c < o.categories; ++c) {
            u -= bg_weight[static_cast<std::size_t>(c)];
            if (u < 0) return c;
        }
        return o.categories - 1;
    };

    std::vector<fs::path> written;
    for (int tb = 0; tb < o.testbeds; ++tb) {
        const std::string name = kTestbeds[tb];
        struct Record {
            double t;
            json j;
        };
        std::vector<Record> records;
        std::vector<std::pair<double, double>> windows;
        for (int a = 0; a < o.attacks_per_testbed; ++a) {
            const double s = start + uniform_real(rng, 0.1, 0.9) * (o.span - o.attack_length);
            windows.emplace_back(s, s + o.attack_length);
        }
        auto in_window = [&](double t) {
            for (const auto& [s, e] : windows) {
                if (t >= s && t < e) return true;
            }
            return false;
        };
        auto host = [&](std::uint64_t k) { return name + "-host" + std::to_string(k); };

        const auto background = static_cast<std::size_t>(o.alerts_per_day * o.span / kDay);
        for (std::size_t i = 0; i < background; ++i) {
            const double t = start + unit_uniform(rng) * o.span;
            const bool mislabel = unit_uniform(rng) < o.mislabel_rate;
            const std::string attack = in_window(t) ? "attack" : "-";
            records.push_back({t,
                               {{"timestamp", t},
                                {"name", categories[static_cast<std::size_t>(pick_background())]},
                                {"host", host(uniform_index(rng, static_cast<std::uint64_t>(o.hosts_per_testbed)))},
                                {"time_label", attack},
                                {"event_label", mislabel ? json("attack") : json("-")}}});
        }
        for (std::size_t w = 0; w < windows.size(); ++w) {
            const auto [s, e] = windows[w];
            const std::string step = "step" + std::to_string(w + 1);
            const std::uint64_t victim = uniform_index(rng, static_cast<std::uint64_t>(o.hosts_per_testbed));
            const auto burst = static_cast<std::size_t>(o.alerts_per_day * (e - s) / kDay * 6.0);
            for (std::size_t i = 0; i < burst; ++i) {
                const double t = s + unit_uniform(rng) * (e - s);
                const auto c = uniform_index(rng, static_cast<std::uint64_t>(attack_categories));
                const bool attack_event = unit_uniform(rng) < 0.93;
                const std::uint64_t h =
                    unit_uniform(rng) < 0.8 ? victim
                                            : uniform_index(rng, static_cast<std::uint64_t>(o.hosts_per_testbed));
                records.push_back({t,
                                   {{"timestamp", t},
                                    {"name", categories[static_cast<std::size_t>(c)]},
                                    {"host", host(h)},
                                    {"time_label", step},
                                    {"event_label", attack_event ? json(step) : json("-")}}});
            }
        }
        std::stable_sort(records.begin(), records.end(), [](const Record& a, const Record& b) { return a.t < b.t; });

        const fs::path path = dir / (name + "_alerts.jsonl");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        for (std::size_t i = 0; i < records.size(); ++i) {
            records[i].j["id"] = name + "-" + std::to_string(i);
            out << records[i].j.dump() << '\n';
        }
        written.push_back(path);
    }
    return written;
}

}  // namespace aact
