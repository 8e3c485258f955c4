// Command-line front end: fit/detect on CSV series, generate the synthetic
// benchmarks, stream online detection, and run the method comparison.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emodm/baselines.hpp"
#include "emodm/detector.hpp"
#include "emodm/errors.hpp"
#include "emodm/gmm.hpp"
#include "emodm/ingest.hpp"
#include "emodm/llg.hpp"
#include "emodm/preprocess.hpp"
#include "emodm/sallen_key.hpp"
#include "emodm/sim_trace.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace emodm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed) {
    if (flag_seed) return *flag_seed;
    if (const char* env = std::getenv("EMODM_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::invalid_argument("EMODM_SEED is not a valid seed: " + std::string(env));
        }
    }
    return 0;
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    out << j.dump(2) << '\n';
}

void write_manifest(const std::string& command, const json& config,
                    const std::vector<std::string>& outputs,
                    const std::filesystem::path& dir) {
    json manifest;
    manifest["schema_version"] = 1;
    manifest["command"] = command;
    manifest["config"] = config;
    manifest["outputs"] = outputs;
    write_json_file(manifest, dir / "manifest.json");
}

json params_to_json(const MixtureParams& p) {
    json j;
    j["normal"] = {{"mean", p.normal.mean}, {"std_dev", p.normal.std_dev}};
    j["abnormal"] = {{"mean", p.abnormal.mean}, {"std_dev", p.abnormal.std_dev}};
    j["abnormal_weight"] = p.abnormal_weight;
    return j;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_segments(const std::string& text) {
    std::vector<std::pair<std::size_t, std::size_t>> segments;
    if (text.empty()) return segments;
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        const auto dash = piece.find('-');
        if (dash == std::string::npos) {
            throw std::invalid_argument("segment '" + piece + "' must look like START-END");
        }
        try {
            segments.emplace_back(std::stoul(piece.substr(0, dash)),
                                  std::stoul(piece.substr(dash + 1)));
        } catch (const std::exception&) {
            throw std::invalid_argument("segment '" + piece + "' must look like START-END");
        }
    }
    return segments;
}

struct DetectArgs {
    std::string input;
    std::string layout = "trace";
    std::string key;
    bool aggregate = false;
    bool log10 = false;
    double threshold = 0.95;
    std::optional<std::uint64_t> seed;
    std::string output_dir = ".";
};

RawSeries load_series(const std::string& input, const std::string& layout,
                      const std::string& key, bool aggregate) {
    if (layout == "trace") {
        return read_trace_csv(input, false).outputs;
    }
    const Dataset data =
        read_csv(input, layout == "long" ? CsvLayout::long_form : CsvLayout::wide);
    if (!key.empty()) {
        const auto it = data.series_by_key.find(key);
        if (it == data.series_by_key.end()) {
            throw DataError("key '" + key + "' not present in " + input);
        }
        return it->second;
    }
    if (aggregate || data.series_by_key.size() == 1) {
        return aggregate_sum(data, {});
    }
    throw std::invalid_argument("multiple keys in " + input +
                                "; pick one with --key or sum them with --aggregate");
}

int run_detect(const DetectArgs& args) {
    const std::uint64_t seed = resolve_seed(args.seed);
    RawSeries raw = load_series(args.input, args.layout, args.key, args.aggregate);
    if (args.log10) raw = log10_transform(raw);

    const RateSeries rates = relative_change_rate(raw);
    DetectionConfig config;
    config.alpha_f = args.threshold;
    config.fit.seed = seed;

    const FitResult fit = fit_em(rates, default_init(rates), config.fit);
    const MixtureParams params = canonicalize_components(fit.params);
    const DetectionReport report = flag_and_segment(rates, params, config);

    const std::filesystem::path dir(args.output_dir);
    std::filesystem::create_directories(dir);

    json j;
    j["schema_version"] = 1;
    j["alpha_f"] = config.alpha_f;
    j["seed"] = seed;
    j["valid_count"] = rates.valid_count();
    j["flagged_count"] = report.flagged.size();
    j["params"] = params_to_json(params);
    j["failure_probability"] = report.failure_probability;
    j["segments"] = json::array();
    for (const auto& [s, e] : report.segments) {
        j["segments"].push_back({{"start_rate_index", s},
                                 {"end_rate_index", e},
                                 {"start_raw_index", rates.origin_index[s]},
                                 {"end_raw_index", rates.origin_index[e]}});
    }
    j["convergence"] = {{"converged", fit.converged},
                        {"iterations", fit.iterations_used},
                        {"final_loglik", fit.loglik_trace.back()}};
    write_json_file(j, dir / "report.json");

    {
        std::ofstream out(dir / "posteriors.csv");
        if (!out) throw DataError("cannot open posteriors.csv for writing");
        out << "index,timestamp,rate,posterior,flagged\n";
        char buf[40];
        for (std::size_t i = 0; i < rates.size(); ++i) {
            const std::size_t origin = rates.origin_index[i];
            const double t = origin < raw.timestamps.size() ? raw.timestamps[origin]
                                                            : static_cast<double>(origin);
            const bool flagged = rates.valid[i] && report.posteriors[i] >= config.alpha_f;
            out << i << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", t);
            out << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", rates.rates[i]);
            out << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", report.posteriors[i]);
            out << buf << ',' << (flagged ? 1 : 0) << '\n';
        }
    }

    json config_json;
    config_json["input"] = args.input;
    config_json["layout"] = args.layout;
    config_json["key"] = args.key;
    config_json["aggregate"] = args.aggregate;
    config_json["log10"] = args.log10;
    config_json["threshold"] = args.threshold;
    config_json["seed"] = seed;
    write_manifest("detect", config_json, {"report.json", "posteriors.csv"}, dir);

    std::cout << "flagged " << report.flagged.size() << " of " << rates.valid_count()
              << " valid rates; failure probability " << report.failure_probability << "\n";
    return kExitOk;
}

struct SimulateArgs {
    std::string preset;
    std::size_t mc_draws = 1000;
    double noise = 0.01;
    std::string segments; // custom schedule override
    std::size_t periods = 0;
    double duration = 0.0;
    std::optional<std::uint64_t> seed;
    std::string output_dir = ".";
};

int run_simulate_sallen_key(const SimulateArgs& args) {
    const std::uint64_t seed = resolve_seed(args.seed);
    FaultSchedule schedule = sallen_key_reference_schedule();
    if (args.periods > 0) schedule.total_periods = args.periods;
    if (args.duration > 0.0) {
        schedule.period_duration = args.duration / static_cast<double>(schedule.total_periods);
    }
    if (!args.segments.empty()) schedule.abnormal_segments = parse_segments(args.segments);
    validate_schedule(schedule);

    const InputKind kind =
        (args.preset == "paper-double") ? InputKind::double_component : InputKind::single;
    const SimTrace trace = run_benchmark(schedule, CircuitParams{}, DriftDistribution{}, kind,
                                         args.mc_draws, seed);

    const std::filesystem::path dir(args.output_dir);
    std::filesystem::create_directories(dir);
    write_trace_csv(trace, (dir / "trace.csv").string());

    json config_json;
    config_json["kind"] = "sallen-key";
    config_json["preset"] = args.preset;
    config_json["mc_draws"] = args.mc_draws;
    config_json["periods"] = schedule.total_periods;
    config_json["period_duration_s"] = schedule.period_duration;
    config_json["segments"] = schedule.abnormal_segments;
    config_json["input"] = trace.input_description;
    config_json["seed"] = seed;
    write_manifest("simulate", config_json, {"trace.csv"}, dir);
    std::cout << "wrote " << trace.outputs.values.size() << " periods ("
              << schedule.abnormal_period_count() << " abnormal) to "
              << (dir / "trace.csv").string() << "\n";
    return kExitOk;
}

int run_simulate_llg(const SimulateArgs& args) {
    const std::uint64_t seed = resolve_seed(args.seed);
    FaultSchedule schedule = llg_reference_schedule(args.preset != "paper-single");
    if (args.periods > 0) schedule.total_periods = args.periods;
    if (args.duration > 0.0) {
        schedule.period_duration = args.duration / static_cast<double>(schedule.total_periods);
    }
    if (!args.segments.empty()) schedule.abnormal_segments = parse_segments(args.segments);
    validate_schedule(schedule);

    const SimTrace trace = run_llg_benchmark(schedule, LlgParams{}, M_PI / 4.0, M_PI / 12.0,
                                             args.noise, seed);

    const std::filesystem::path dir(args.output_dir);
    std::filesystem::create_directories(dir);
    write_trace_csv(trace, (dir / "trace.csv").string());

    json config_json;
    config_json["kind"] = "llg";
    config_json["preset"] = args.preset;
    config_json["noise_fraction"] = args.noise;
    config_json["periods"] = schedule.total_periods;
    config_json["period_duration_s"] = schedule.period_duration;
    config_json["segments"] = schedule.abnormal_segments;
    config_json["seed"] = seed;
    write_manifest("simulate", config_json, {"trace.csv"}, dir);
    std::cout << "wrote " << trace.outputs.values.size() << " periods ("
              << schedule.abnormal_period_count() << " abnormal) to "
              << (dir / "trace.csv").string() << "\n";
    return kExitOk;
}

struct StreamArgs {
    std::string input = "-";
    double threshold = 0.95;
    std::size_t warmup = 50;
    std::size_t refit_period = 100;
    std::optional<std::uint64_t> seed;
    std::string output_dir = ".";
};

int run_stream(const StreamArgs& args) {
    const std::uint64_t seed = resolve_seed(args.seed);
    DetectionConfig config;
    config.alpha_f = args.threshold;
    config.warmup_count = args.warmup;
    config.refit_period = args.refit_period;
    config.fit.seed = seed;
    OnlineDetector detector(config);

    std::ifstream file;
    std::istream* in = &std::cin;
    if (args.input != "-") {
        file.open(args.input);
        if (!file) throw DataError("cannot open " + args.input);
        in = &file;
    }

    std::size_t samples = 0, alarms = 0, parse_errors = 0;
    std::string line;
    while (std::getline(*in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto begin = line.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        line = line.substr(begin, line.find_last_not_of(" \t") - begin + 1);
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(line, &used);
            if (used != line.size() || !std::isfinite(value)) throw std::invalid_argument(line);
        } catch (const std::exception&) {
            std::cerr << "warning: skipping unparseable line '" << line << "'\n";
            ++parse_errors;
            continue;
        }
        ++samples;
        const OnlineStepResult res = detector.step(value);
        if (res.alarm) {
            ++alarms;
            json j;
            j["index"] = res.alarm->index;
            j["value"] = res.alarm->value;
            j["posterior"] = res.alarm->posterior;
            std::cout << j.dump() << "\n";
        }
    }

    json summary;
    summary["summary"] = {{"samples", samples},
                          {"alarms", alarms},
                          {"parse_errors", parse_errors},
                          {"failure_probability",
                           detector.last_params()
                               ? json(detector.last_params()->abnormal_weight)
                               : json(nullptr)}};
    std::cout << summary.dump() << "\n";

    const std::filesystem::path dir(args.output_dir);
    std::filesystem::create_directories(dir);
    json config_json;
    config_json["input"] = args.input;
    config_json["threshold"] = args.threshold;
    config_json["warmup"] = args.warmup;
    config_json["refit_period"] = args.refit_period;
    config_json["seed"] = seed;
    write_manifest("stream", config_json, {}, dir);
    return kExitOk;
}

struct CompareArgs {
    std::string input;
    double threshold = 0.95;
    bool with_lof = false;
    std::optional<std::uint64_t> seed;
    std::string output_dir = ".";
};

int run_compare(const CompareArgs& args) {
    const std::uint64_t seed = resolve_seed(args.seed);
    const SimTrace trace = read_trace_csv(args.input, true);

    ComparisonSettings settings;
    settings.detection.alpha_f = args.threshold;
    settings.detection.fit.seed = seed;
    settings.with_lof = args.with_lof;
    const auto rows = run_comparison(trace, settings, seed);

    const std::filesystem::path dir(args.output_dir);
    std::filesystem::create_directories(dir);

    json j;
    j["schema_version"] = 1;
    j["input"] = args.input;
    j["seed"] = seed;
    j["rows"] = json::array();
    {
        std::ofstream csv(dir / "comparison.csv");
        if (!csv) throw DataError("cannot open comparison.csv for writing");
        csv << "method,anomalies_detected,abnormal_fraction,failure_probability,"
               "true_count,segment_recall,wall_time_s,error\n";
        for (const auto& row : rows) {
            json r;
            r["method"] = row.method_name;
            r["anomalies_detected"] = row.anomalies_detected;
            r["abnormal_fraction"] = row.abnormal_fraction;
            r["failure_probability"] =
                row.failure_probability ? json(*row.failure_probability) : json(nullptr);
            r["true_count"] = row.true_count;
            r["segment_recall"] =
                row.segment_recall ? json(*row.segment_recall) : json(nullptr);
            r["wall_time_s"] = row.wall_time;
            r["error"] = row.error;
            j["rows"].push_back(r);

            csv << row.method_name << ',' << row.anomalies_detected << ','
                << row.abnormal_fraction << ',';
            if (row.failure_probability) csv << *row.failure_probability;
            csv << ',' << row.true_count << ',';
            if (row.segment_recall) csv << *row.segment_recall;
            else csv << "na";
            csv << ',' << row.wall_time << ',' << row.error << '\n';
        }
    }
    write_json_file(j, dir / "comparison.json");

    json config_json;
    config_json["input"] = args.input;
    config_json["threshold"] = args.threshold;
    config_json["with_lof"] = args.with_lof;
    config_json["seed"] = seed;
    write_manifest("compare", config_json, {"comparison.csv", "comparison.json"}, dir);

    for (const auto& row : rows) {
        std::cout << row.method_name << ": ";
        if (row.error.empty()) {
            std::cout << row.anomalies_detected << " anomalies ("
                      << 100.0 * row.abnormal_fraction << "%)";
            if (row.segment_recall) std::cout << ", recall " << *row.segment_recall;
        } else {
            std::cout << "error: " << row.error;
        }
        std::cout << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-state mixture anomaly detection for time series"};
    app.require_subcommand(1);

    DetectArgs detect_args;
    CLI::App* detect =
        app.add_subcommand("detect", "Fit the mixture and flag outliers in a CSV series");
    detect->add_option("--input", detect_args.input, "input CSV")->required();
    detect->add_option("--layout", detect_args.layout, "trace, wide or long")
        ->check(CLI::IsMember({"trace", "wide", "long"}));
    detect->add_option("--key", detect_args.key, "series key to analyze (wide/long layouts)");
    detect->add_flag("--aggregate", detect_args.aggregate, "sum all keys before analysis");
    detect->add_flag("--log10", detect_args.log10, "apply a base-10 log transform first");
    detect->add_option("--threshold", detect_args.threshold, "posterior threshold alpha_f");
    detect->add_option("--seed", detect_args.seed, "random seed (EMODM_SEED as fallback)");
    detect->add_option("--output-dir", detect_args.output_dir, "where to write outputs");

    SimulateArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "Generate a labeled benchmark trace");
    simulate->require_subcommand(1);
    CLI::App* sk = simulate->add_subcommand("sallen-key", "second-order low-pass filter benchmark");
    sk->add_option("--preset", sim_args.preset, "paper-single or paper-double")
        ->required()
        ->check(CLI::IsMember({"paper-single", "paper-double"}));
    sk->add_option("--mc-draws", sim_args.mc_draws, "Monte-Carlo draws per abnormal period");
    sk->add_option("--periods", sim_args.periods, "override period count");
    sk->add_option("--duration", sim_args.duration, "override total duration in seconds");
    sk->add_option("--segments", sim_args.segments,
                   "override abnormal segments, e.g. 151-160,211-220");
    sk->add_option("--seed", sim_args.seed, "random seed (EMODM_SEED as fallback)");
    sk->add_option("--output-dir", sim_args.output_dir, "where to write outputs");
    CLI::App* llg = simulate->add_subcommand("llg", "spin-torque macrospin benchmark");
    llg->add_option("--preset", sim_args.preset, "paper-single or paper-multi")
        ->required()
        ->check(CLI::IsMember({"paper-single", "paper-multi"}));
    llg->add_option("--noise", sim_args.noise, "observation noise fraction of peak-to-peak");
    llg->add_option("--periods", sim_args.periods, "override period count");
    llg->add_option("--duration", sim_args.duration, "override total duration in seconds");
    llg->add_option("--segments", sim_args.segments, "override abnormal segments");
    llg->add_option("--seed", sim_args.seed, "random seed (EMODM_SEED as fallback)");
    llg->add_option("--output-dir", sim_args.output_dir, "where to write outputs");

    StreamArgs stream_args;
    CLI::App* stream =
        app.add_subcommand("stream", "Online detection over a value-per-line stream");
    stream->add_option("--input", stream_args.input, "input file, or - for stdin");
    stream->add_option("--threshold", stream_args.threshold, "posterior threshold alpha_f");
    stream->add_option("--warmup", stream_args.warmup, "valid rates required before scoring");
    stream->add_option("--refit-period", stream_args.refit_period, "full refit cadence");
    stream->add_option("--seed", stream_args.seed, "random seed (EMODM_SEED as fallback)");
    stream->add_option("--output-dir", stream_args.output_dir, "where to write the manifest");

    CompareArgs compare_args;
    CLI::App* compare = app.add_subcommand("compare", "Run all detectors on a labeled trace");
    compare->add_option("--input", compare_args.input, "labeled trace CSV")->required();
    compare->add_option("--threshold", compare_args.threshold, "posterior threshold alpha_f");
    compare->add_flag("--with-lof", compare_args.with_lof, "include the local outlier factor row");
    compare->add_option("--seed", compare_args.seed, "random seed (EMODM_SEED as fallback)");
    compare->add_option("--output-dir", compare_args.output_dir, "where to write outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*detect) return run_detect(detect_args);
        if (*sk) return run_simulate_sallen_key(sim_args);
        if (*llg) return run_simulate_llg(sim_args);
        if (*stream) return run_stream(stream_args);
        if (*compare) return run_compare(compare_args);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
