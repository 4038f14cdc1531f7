// Command-line front end: offline experiment harness and the live service.

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <queue>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "aact/alert_io.hpp"
#include "aact/errors.hpp"
#include "aact/http_api.hpp"
#include "aact/pipeline.hpp"
#include "aact/triage.hpp"

using namespace aact;
using nlohmann::json;

namespace {

std::atomic<HttpApi*> g_server{nullptr};

void on_signal(int) {
    if (HttpApi* s = g_server.load()) s->stop();
}

// Accepts plain seconds or a number with one of the suffixes s, m, h, d.
Duration parse_duration(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty duration");
    double scale = 1.0;
    std::string number = text;
    switch (text.back()) {
        case 's': number.pop_back(); break;
        case 'm': scale = kMinute; number.pop_back(); break;
        case 'h': scale = kHour; number.pop_back(); break;
        case 'd': scale = kDay; number.pop_back(); break;
        default: break;
    }
    std::size_t used = 0;
    const double v = std::stod(number, &used);
    if (used != number.size() || !(v > 0)) throw std::invalid_argument("bad duration '" + text + "'");
    return v * scale;
}

std::vector<Duration> parse_durations(const std::vector<std::string>& items) {
    std::vector<Duration> out;
    for (const auto& s : items) out.push_back(parse_duration(s));
    return out;
}

std::vector<Alert> read_alerts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<Alert> alerts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            alerts.push_back(parse_alert(std::string_view(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    std::stable_sort(alerts.begin(), alerts.end(),
                     [](const Alert& a, const Alert& b) { return a.created_at < b.created_at; });
    return alerts;
}

void write_alerts(std::ostream& out, const std::vector<Alert>& alerts) {
    for (const auto& a : alerts) out << alert_to_json(a).dump() << '\n';
}

FeatureTable read_dump(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_feature_dump(in);
}

ModelArtifact read_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

// Writes to the file when a path is given, else to stdout.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    fn(out);
}

struct FeatureFlags {
    std::string workflow = "ait";
    std::vector<std::string> windows;
    std::vector<std::string> short_windows;
    std::string recency_cap;
    std::string warmup;
    std::string target;

    void add(CLI::App* app) {
        app->add_option("--workflow", workflow, "Feature layout")->check(CLI::IsMember({"full", "ait"}));
        app->add_option("--windows", windows, "Rate windows, e.g. 1d,7d,30d")->delimiter(',');
        app->add_option("--short-windows", short_windows, "Resolved-ratio windows (full workflow)")->delimiter(',');
        app->add_option("--recency-cap", recency_cap, "Recency value for unseen keys");
        app->add_option("--warmup", warmup, "Leading span that only feeds the store");
        app->add_option("--target", target, "Label: investigated or malicious")
            ->check(CLI::IsMember({"investigated", "malicious"}));
    }

    FeatureConfig features() const {
        FeatureConfig c = *parse_workflow(workflow) == Workflow::Full ? FeatureConfig::full() : FeatureConfig::ait();
        if (!windows.empty()) c.windows.deltas = parse_durations(windows);
        if (!short_windows.empty()) c.windows.short_only = parse_durations(short_windows);
        if (!recency_cap.empty()) c.recency_cap = parse_duration(recency_cap);
        c.windows.validate();
        return c;
    }

    ReplayOptions replay() const {
        ReplayOptions r;
        if (!warmup.empty()) r.warmup = parse_duration(warmup);
        if (target == "investigated") r.target = LabelTarget::Investigated;
        if (target == "malicious") r.target = LabelTarget::Malicious;
        return r;
    }
};

struct GbdtFlags {
    GbdtParams p;
    void add(CLI::App* app) {
        app->add_option("--trees", p.n_trees, "Boosting rounds")->check(CLI::PositiveNumber);
        app->add_option("--depth", p.max_depth, "Maximum tree depth")->check(CLI::PositiveNumber);
        app->add_option("--learning-rate", p.learning_rate, "Shrinkage");
        app->add_option("--row-subsample", p.subsample, "Row fraction per round");
        app->add_option("--min-leaf", p.min_samples_leaf, "Minimum rows per leaf");
    }
};

// Sends the recorded stream to a running server, delivering each queued
// alert's resolution at its resolved_at.
int replay_http(const std::vector<Alert>& alerts, const std::string& url, const std::string& token, double speed) {
    httplib::Client client(url);
    client.set_read_timeout(30, 0);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    const auto wall_start = std::chrono::steady_clock::now();
    const Timestamp t0 = alerts.empty() ? 0.0 : alerts.front().created_at;
    auto pace = [&](Timestamp t) {
        if (speed <= 0) return;
        std::this_thread::sleep_until(wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                       std::chrono::duration<double>((t - t0) / speed)));
    };
    using Pending = std::pair<Timestamp, std::size_t>;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;
    std::size_t sent = 0, queued = 0, closed = 0, resolutions = 0, rejected = 0;

    auto deliver = [&](Timestamp until, bool all) {
        while (!pending.empty() && (all || pending.top().first <= until)) {
            const Alert& a = alerts[pending.top().second];
            pending.pop();
            pace(a.resolution->resolved_at);
            const auto res = client.Post("/v1/alerts/" + a.id + "/resolution", headers,
                                         resolution_to_json(*a.resolution).dump(), "application/json");
            if (res && res->status == 200) {
                ++resolutions;
            } else {
                ++rejected;
            }
        }
    };

    for (std::size_t i = 0; i < alerts.size(); ++i) {
        const Alert& a = alerts[i];
        deliver(a.created_at, false);
        pace(a.created_at);
        json body = alert_to_json(a);
        body.erase("resolution");
        const auto res = client.Post("/v1/alerts", headers, body.dump(), "application/json");
        if (!res) {
            std::cerr << "error: " << httplib::to_string(res.error()) << '\n';
            return 1;
        }
        if (res->status != 201) {
            ++rejected;
            continue;
        }
        ++sent;
        const json reply = json::parse(res->body);
        if (reply.value("disposition", "") == "auto-closed") {
            ++closed;
        } else {
            ++queued;
            if (a.resolution) pending.emplace(a.resolution->resolved_at, i);
        }
    }
    deliver(0.0, true);
    std::cout << json{{"alerts", sent},
                      {"queued", queued},
                      {"auto_closed", closed},
                      {"resolutions", resolutions},
                      {"rejected", rejected}}
                     .dump()
              << '\n';
    return 0;
}

ServiceConfig load_service_config(const std::string& path) {
    std::string file = path;
    if (file.empty()) {
        if (const char* env = std::getenv("AACT_SERVICE_CONFIG")) file = env;
    }
    if (file.empty()) return {};
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file);
    return ServiceConfig::from_json(json::parse(in));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Alert triage: feature replay, training, evaluation and the live service"};
    app.require_subcommand(1);

    // ingest-ait
    auto* ingest = app.add_subcommand("ingest-ait", "Normalize an AIT alert corpus into alert records");
    std::string ingest_in, ingest_out = "-";
    AitIngestOptions ingest_opts;
    ingest->add_option("--input", ingest_in, "Corpus directory or file")->required();
    ingest->add_option("--out", ingest_out, "Alert JSONL output");
    ingest->add_option("--seed", ingest_opts.jitter_seed, "Label-time jitter seed");
    ingest->add_option("--subsample", ingest_opts.subsample, "Per-tenant fraction kept")
        ->check(CLI::Range(0.0, 1.0));
    ingest->add_option("--subsample-seed", ingest_opts.subsample_seed, "Subsample seed");

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic corpus");
    std::string synth_kind = "ait", synth_out;
    std::uint64_t synth_seed = 1;
    double synth_rate = 0;
    synth->add_option("--kind", synth_kind, "ait (directory of testbed files) or soc (alert JSONL)")
        ->check(CLI::IsMember({"ait", "soc"}));
    synth->add_option("--out", synth_out, "Output directory (ait) or file (soc)")->required();
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--alerts-per-day", synth_rate, "Mean volume per testbed or overall");

    // featurize
    auto* feat = app.add_subcommand("featurize", "Replay alerts into a feature dump");
    std::string feat_in, feat_out = "-";
    FeatureFlags feat_flags;
    feat->add_option("--input", feat_in, "Alert JSONL")->required();
    feat->add_option("--out", feat_out, "Dump CSV output");
    feat_flags.add(feat);

    // train
    auto* train = app.add_subcommand("train", "Train a model on a feature dump");
    std::string train_in, train_out = "-", train_kind = "gbdt";
    GbdtFlags train_params;
    std::uint64_t train_seed = 0;
    train->add_option("--dump", train_in, "Feature dump CSV")->required();
    train->add_option("--out", train_out, "Model artifact output");
    train->add_option("--kind", train_kind, "Model family")->check(CLI::IsMember({"gbdt", "logistic", "forest"}));
    train->add_option("--seed", train_seed, "Training seed");
    train_params.add(train);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Time-series cross-validation against the baseline");
    std::string eval_in, eval_dump, eval_out = "-", eval_dump_out, eval_models;
    FeatureFlags eval_flags;
    GbdtFlags eval_gbdt;
    std::size_t eval_folds = 2;
    double eval_threshold = 0.5;
    std::uint64_t eval_seed = 0;
    auto* eval_src = eval->add_option_group("source");
    eval_src->add_option("--input", eval_in, "Alert JSONL");
    eval_src->add_option("--dump", eval_dump, "Feature dump CSV");
    eval_src->require_option(1);
    eval->add_option("--folds", eval_folds, "Number of test blocks")->check(CLI::Range(2, 1000));
    eval->add_option("--threshold", eval_threshold, "Decision threshold")->check(CLI::Range(0.0, 1.0));
    eval->add_option("--seed", eval_seed, "Training seed");
    eval->add_option("--out", eval_out, "Metrics table output");
    eval->add_option("--dump-out", eval_dump_out, "Also write the feature dump");
    eval->add_option("--models-dir", eval_models, "Also write one model artifact per fold");
    eval_flags.add(eval);
    eval_gbdt.add(eval);

    // curve
    auto* curve = app.add_subcommand("curve", "Alert reduction against FNR over thresholds");
    std::string curve_dump, curve_model, curve_out = "-", curve_system = "model";
    std::vector<double> curve_thresholds;
    std::size_t curve_steps = 100, curve_folds = 2;
    GbdtFlags curve_gbdt;
    std::string curve_workflow = "ait";
    curve->add_option("--dump", curve_dump, "Feature dump CSV")->required();
    curve->add_option("--model", curve_model, "Score with this artifact instead of out-of-fold models");
    curve->add_option("--system", curve_system, "Scores to sweep")->check(CLI::IsMember({"model", "baseline"}));
    curve->add_option("--thresholds", curve_thresholds, "Ascending threshold list")->delimiter(',');
    curve->add_option("--steps", curve_steps, "Evenly spaced thresholds when no list is given");
    curve->add_option("--folds", curve_folds, "Folds for out-of-fold scores")->check(CLI::Range(2, 1000));
    curve->add_option("--workflow", curve_workflow, "Layout of the dump")->check(CLI::IsMember({"full", "ait"}));
    curve->add_option("--out", curve_out, "Curve table output");
    curve_gbdt.add(curve);

    // correlate
    auto* corr = app.add_subcommand("correlate", "Pearson correlations between dump columns and the label");
    std::string corr_dump, corr_out = "-";
    std::vector<std::string> corr_columns;
    corr->add_option("--dump", corr_dump, "Feature dump CSV")->required();
    corr->add_option("--columns", corr_columns, "Columns to include (default all)")->delimiter(',');
    corr->add_option("--out", corr_out, "Matrix output");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the triage service over HTTP");
    std::string serve_model, serve_state, serve_config, serve_host = "127.0.0.1", serve_token, serve_history;
    std::optional<double> serve_threshold;
    int serve_port = 8080;
    std::size_t serve_threads = 8;
    serve->add_option("--model", serve_model, "Model artifact");
    serve->add_option("--threshold", serve_threshold, "Auto-close threshold")->check(CLI::Range(0.0, 1.0));
    serve->add_option("--state-dir", serve_state, "Event log and checkpoint directory");
    serve->add_option("--config", serve_config, "Service config JSON (or $AACT_SERVICE_CONFIG)");
    serve->add_option("--history", serve_history, "Alert JSONL preloaded into the store on a fresh start");
    serve->add_option("--host", serve_host, "Bind address");
    serve->add_option("--port", serve_port, "Port");
    serve->add_option("--token", serve_token, "Bearer token (or $AACT_TOKEN)");
    serve->add_option("--threads", serve_threads, "Worker threads")->check(CLI::PositiveNumber);

    // replay
    auto* replay = app.add_subcommand("replay", "Drive the service from a recorded alert stream");
    std::string replay_in, replay_url, replay_token, replay_model, replay_state, replay_config;
    double replay_speed = 0.0;
    std::optional<double> replay_threshold;
    replay->add_option("--input", replay_in, "Alert JSONL with recorded resolutions")->required();
    replay->add_option("--speed", replay_speed, "Event-time speed-up; 0 is as fast as possible")
        ->check(CLI::NonNegativeNumber);
    replay->add_option("--url", replay_url, "Send to a running server instead of an in-process service");
    replay->add_option("--token", replay_token, "Bearer token for --url");
    replay->add_option("--model", replay_model, "Model artifact (in-process)");
    replay->add_option("--threshold", replay_threshold, "Auto-close threshold (in-process)")
        ->check(CLI::Range(0.0, 1.0));
    replay->add_option("--state-dir", replay_state, "State directory (in-process)");
    replay->add_option("--config", replay_config, "Service config JSON (in-process)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            const AitDataset data = ingest_ait(std::filesystem::path(ingest_in), ingest_opts);
            emit(ingest_out, [&](std::ostream& out) { write_alerts(out, data.alerts); });
            std::cerr << "alerts " << data.alerts.size() << ", malformed " << data.malformed << ", files "
                      << data.files << ", tenants " << data.tenant_count() << ", categories "
                      << data.category_count() << '\n';
        } else if (*synth) {
            if (synth_kind == "ait") {
                SyntheticAitOptions o;
                o.seed = synth_seed;
                if (synth_rate > 0) o.alerts_per_day = synth_rate;
                for (const auto& f : write_synthetic_ait(synth_out, o)) std::cerr << f.string() << '\n';
            } else {
                SyntheticSocOptions o;
                o.seed = synth_seed;
                if (synth_rate > 0) o.alerts_per_day = synth_rate;
                const auto alerts = synthesize_soc_alerts(o);
                emit(synth_out, [&](std::ostream& out) { write_alerts(out, alerts); });
            }
        } else if (*feat) {
            const auto table = featurize(read_alerts(feat_in), feat_flags.features(), feat_flags.replay());
            emit(feat_out, [&](std::ostream& out) { write_feature_dump(out, table); });
        } else if (*train) {
            const TrainingSet data = to_training_set(read_dump(train_in));
            ModelArtifact model;
            if (train_kind == "gbdt") {
                train_params.p.seed = train_seed;
                model = train_gbdt(data, train_params.p);
            } else if (train_kind == "logistic") {
                LogisticParams p;
                p.seed = train_seed;
                model = train_logistic(data, p);
            } else {
                ForestParams p;
                p.seed = train_seed;
                model = train_forest(data, p);
            }
            emit(train_out, [&](std::ostream& out) { out << serialize(model); });
        } else if (*eval) {
            PipelineConfig config;
            config.features = eval_flags.features();
            config.replay = eval_flags.replay();
            config.folds = eval_folds;
            config.threshold = eval_threshold;
            config.gbdt = eval_gbdt.p;
            config.gbdt.seed = eval_seed;
            const PipelineResult result = eval_dump.empty() ? run_pipeline(read_alerts(eval_in), config)
                                                            : evaluate_dump(read_dump(eval_dump), config);
            emit(eval_out, [&](std::ostream& out) { write_metrics_table(out, result); });
            if (!eval_dump_out.empty()) {
                emit(eval_dump_out, [&](std::ostream& out) { write_feature_dump(out, result.dump); });
            }
            if (!eval_models.empty()) {
                std::filesystem::create_directories(eval_models);
                for (std::size_t f = 0; f < result.models.size(); ++f) {
                    emit((std::filesystem::path(eval_models) / ("fold" + std::to_string(f) + ".json")).string(),
                         [&](std::ostream& out) { out << serialize(result.models[f]); });
                }
            }
        } else if (*curve) {
            const FeatureTable dump = read_dump(curve_dump);
            const TrainingSet data = to_training_set(dump);
            const FeatureConfig features =
                *parse_workflow(curve_workflow) == Workflow::Full ? FeatureConfig::full() : FeatureConfig::ait();
            std::vector<double> scores;
            std::vector<int> labels;
            if (curve_system == "baseline") {
                scores = baseline_scores(dump, features);
                labels.assign(data.labels().begin(), data.labels().end());
            } else if (!curve_model.empty()) {
                scores = predict_all(read_model(curve_model), data);
                labels.assign(data.labels().begin(), data.labels().end());
            } else {
                // Pool the out-of-fold test scores so no row is scored by a
                // model that saw it.
                const FoldPlan plan = plan_time_series_folds(data, curve_folds);
                for (std::size_t f = 0; f < plan.folds.size(); ++f) {
                    const TrainingSet test = data.subset(plan.test_indices(f));
                    const auto model = train_gbdt(data.subset(plan.train_indices(f)), curve_gbdt.p);
                    const auto s = predict_all(model, test);
                    scores.insert(scores.end(), s.begin(), s.end());
                    labels.insert(labels.end(), test.labels().begin(), test.labels().end());
                }
            }
            if (curve_thresholds.empty()) curve_thresholds = default_curve_thresholds(curve_steps);
            const auto points = reduction_fnr_curve(scores, labels, curve_thresholds);
            emit(curve_out, [&](std::ostream& out) { write_curve_table(out, points); });
        } else if (*corr) {
            const auto report = window_correlation_report(read_dump(corr_dump), corr_columns);
            emit(corr_out, [&](std::ostream& out) { write_correlation_table(out, report); });
        } else if (*serve) {
            ServiceConfig config = load_service_config(serve_config);
            if (serve_threshold) config.close_threshold = *serve_threshold;
            if (!serve_state.empty()) config.state_dir = serve_state;
            if (serve_token.empty()) {
                if (const char* env = std::getenv("AACT_TOKEN")) serve_token = env;
            }
            std::optional<ModelArtifact> model;
            if (!serve_model.empty()) model = read_model(serve_model);
            const bool recovering = !config.state_dir.empty() && std::filesystem::exists(config.state_dir / "events.jsonl");
            std::unique_ptr<TriageService> service;
            if (!serve_history.empty() && !recovering) {
                service = std::make_unique<TriageService>(config, build_store(read_alerts(serve_history), config.store),
                                                          std::move(model));
            } else {
                service = std::make_unique<TriageService>(config, std::move(model));
            }
            HttpOptions http;
            if (!serve_token.empty()) http.token = serve_token;
            http.worker_threads = serve_threads;
            HttpApi api(*service, http);
            g_server = &api;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on " << serve_host << ":" << serve_port << '\n';
            const bool ok = api.listen(serve_host, serve_port);
            g_server = nullptr;
            if (!config.state_dir.empty()) service->checkpoint();
            if (!ok) {
                std::cerr << "error: could not bind " << serve_host << ":" << serve_port << '\n';
                return 1;
            }
        } else if (*replay) {
            const auto alerts = read_alerts(replay_in);
            if (!replay_url.empty()) return replay_http(alerts, replay_url, replay_token, replay_speed);
            ServiceConfig config = load_service_config(replay_config);
            if (replay_threshold) config.close_threshold = *replay_threshold;
            if (!replay_state.empty()) config.state_dir = replay_state;
            std::optional<ModelArtifact> model;
            if (!replay_model.empty()) model = read_model(replay_model);
            TriageService service(config, std::move(model));
            StreamReplayOptions opts;
            opts.speed = replay_speed;
            const auto r = replay_stream(service, alerts, opts);
            json out = {{"alerts", r.alerts},           {"queued", r.queued},
                        {"auto_closed", r.auto_closed}, {"resolutions", r.resolutions},
                        {"rejected", r.rejected},       {"wall_seconds", r.wall_seconds},
                        {"true_fnr", r.true_fnr},       {"metrics", to_json(service.metrics())}};
            std::cout << out.dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
