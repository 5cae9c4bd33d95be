#include "seqadapt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <map>
#include <utility>

#include "seqadapt/errors.hpp"
#include "seqadapt/hash.hpp"

namespace seqadapt {

namespace {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}

    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string utc_stamp() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm parts{};
    gmtime_r(&now, &parts);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y%m%dT%H%M%SZ", &parts);
    return buffer;
}

std::string file_hash_hex(const std::string& path) { return "fnv64:" + to_hex(hash_file(path)); }

std::string csv_quote(const std::string& text) {
    std::string quoted = "\"";
    for (char c : text) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

void expect_keys(const nlohmann::json& object, const char* section,
                 std::initializer_list<std::string_view> allowed) {
    if (!object.is_object()) {
        throw ConfigError(std::string(section) + " must be a JSON object");
    }
    for (const auto& item : object.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw ConfigError("unknown key '" + item.key() + "' in " + section);
        }
    }
}

template <typename T>
void read_key(const nlohmann::json& object, const char* key, T& out) {
    if (const auto it = object.find(key); it != object.end()) out = it->get<T>();
}

// Fills in generated regime profiles when the config only gives the knobs.
SynthConfig resolved_synth(const ExperimentConfig& config) {
    SynthConfig synth = config.synth;
    if (synth.regime_profiles.empty()) {
        synth.regime_profiles = make_regime_profiles(
            synth.num_events, synth.num_regimes, config.synth_shared_events,
            config.synth_shared_rate, config.synth_home_rate, config.synth_away_rate);
    }
    validate_synth_config(synth);
    return synth;
}

// Manifest outputs are keyed by file name: every output lives in the run
// directory, and relative names survive moving the directory around.
std::pair<std::string, std::string> output_entry(const std::string& path) {
    return {std::filesystem::path(path).filename().string(), file_hash_hex(path)};
}

void write_manifest(const std::string& run_dir, const std::string& command,
                    const ExperimentConfig& config,
                    const std::map<std::string, std::string>& inputs,
                    const std::map<std::string, std::string>& outputs,
                    const std::map<std::string, double>& timings_ms) {
    nlohmann::json doc;
    doc["command"] = command;
    doc["tool_version"] = kToolVersion;
    doc["created_utc"] = utc_stamp();
    doc["config"] = to_json(config);
    doc["config_hash"] = config_hash(config);
    doc["inputs"] = inputs;
    doc["outputs"] = outputs;
    doc["artifact_versions"] = {{"cohort_archive", 1},
                                {"checkpoint", "SAMODL01"},
                                {"prediction_log", 1},
                                {"report", 1}};
    doc["timings_ms"] = timings_ms;

    const std::string path = run_dir + "/manifest_" + command + ".json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << doc.dump(1) << '\n';
    if (!out) throw IoError("write failure for manifest: " + path);
}

} // namespace

void ExperimentConfig::apply_master_seed(std::uint64_t value) {
    seed = value;
    synth.seed = value;
    split_seed = value + 1;
    train_seed = value + 2;
}

void ExperimentConfig::validate() const {
    if (source != "synth" && source != "ingest") {
        throw ConfigError("data source must be 'synth' or 'ingest', got '" + source + "'");
    }
    if (source == "ingest" && events_path.empty()) {
        throw ConfigError("ingest source requires an events path");
    }
    if (min_patients < 1) throw ConfigError("min_patients must be at least 1");
    if (!(window_hours > 0.0)) throw ConfigError("window_hours must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1)");
    }
    if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) {
        throw ConfigError("valid_fraction must lie in (0, 1)");
    }
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    try {
        training.validate();
        VariantSettings settings;
        settings.variants = variants;
        settings.adapt = adapt;
        settings.warm_start = warm_start;
        settings.threads = threads;
        settings.validate();
    } catch (const ValidationError& error) {
        throw ConfigError(error.what());
    }
}

ExperimentConfig preset_config(std::string_view name) {
    ExperimentConfig config;
    if (name == "desk") {
        config.synth.num_patients = 625; // 500/125 after the default 0.8 split
        config.synth.num_events = 24;
        config.synth.num_targets = 16;
        config.synth.num_regimes = 2;
        config.synth.switch_hazard = 0.04;
        config.synth.min_steps = 6;
        config.synth.max_steps = 20;
        config.training.embed_dim = 16;
        config.training.hidden_dim = 64;
        config.training.max_epochs = 40;
    } else if (name == "paper") {
        config.source = "ingest"; // events path supplied by the caller
        config.training.embed_dim = 64;
        config.training.hidden_dim = 512;
        config.training.max_epochs = 100;
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
    return config;
}

void apply_json(ExperimentConfig& config, const nlohmann::json& document) {
    try {
        expect_keys(document, "config",
                    {"source", "synth", "ingest", "window_hours", "split", "model", "training",
                     "adaptation", "variants", "seed", "threads", "output_dir", "run_label"});
        if (document.contains("seed")) {
            config.apply_master_seed(document.at("seed").get<std::uint64_t>());
        }
        read_key(document, "source", config.source);
        if (document.contains("synth")) {
            const nlohmann::json& synth = document.at("synth");
            expect_keys(synth, "synth",
                        {"patients", "events", "targets", "regimes", "hazard", "min_steps",
                         "max_steps", "seed", "profiles", "shared_events", "shared_rate",
                         "home_rate", "away_rate"});
            read_key(synth, "patients", config.synth.num_patients);
            read_key(synth, "events", config.synth.num_events);
            read_key(synth, "targets", config.synth.num_targets);
            read_key(synth, "regimes", config.synth.num_regimes);
            read_key(synth, "hazard", config.synth.switch_hazard);
            read_key(synth, "min_steps", config.synth.min_steps);
            read_key(synth, "max_steps", config.synth.max_steps);
            read_key(synth, "seed", config.synth.seed);
            read_key(synth, "profiles", config.synth.regime_profiles);
            read_key(synth, "shared_events", config.synth_shared_events);
            read_key(synth, "shared_rate", config.synth_shared_rate);
            read_key(synth, "home_rate", config.synth_home_rate);
            read_key(synth, "away_rate", config.synth_away_rate);
        }
        if (document.contains("ingest")) {
            const nlohmann::json& ingest = document.at("ingest");
            expect_keys(ingest, "ingest", {"events", "ranges", "include", "min_patients"});
            read_key(ingest, "events", config.events_path);
            read_key(ingest, "ranges", config.ranges_path);
            read_key(ingest, "include", config.include_path);
            read_key(ingest, "min_patients", config.min_patients);
        }
        read_key(document, "window_hours", config.window_hours);
        if (document.contains("split")) {
            const nlohmann::json& split = document.at("split");
            expect_keys(split, "split", {"train_fraction", "valid_fraction", "seed"});
            read_key(split, "train_fraction", config.train_fraction);
            read_key(split, "valid_fraction", config.valid_fraction);
            read_key(split, "seed", config.split_seed);
        }
        if (document.contains("model")) {
            const nlohmann::json& model = document.at("model");
            expect_keys(model, "model", {"embed_dim", "hidden_dim"});
            read_key(model, "embed_dim", config.training.embed_dim);
            read_key(model, "hidden_dim", config.training.hidden_dim);
        }
        if (document.contains("training")) {
            const nlohmann::json& training = document.at("training");
            expect_keys(training, "training",
                        {"learning_rate", "batch_size", "max_epochs", "patience",
                         "lambda_grid", "seed"});
            read_key(training, "learning_rate", config.training.learning_rate);
            read_key(training, "batch_size", config.training.batch_size);
            read_key(training, "max_epochs", config.training.max_epochs);
            read_key(training, "patience", config.training.patience);
            read_key(training, "lambda_grid", config.training.lambda_grid);
            read_key(training, "seed", config.train_seed);
        }
        if (document.contains("adaptation")) {
            const nlohmann::json& adaptation = document.at("adaptation");
            expect_keys(adaptation, "adaptation",
                        {"gamma", "epsilon", "learning_rate", "max_epochs", "warm_start"});
            read_key(adaptation, "gamma", config.adapt.gamma);
            read_key(adaptation, "epsilon", config.adapt.epsilon);
            read_key(adaptation, "learning_rate", config.adapt.learning_rate);
            read_key(adaptation, "max_epochs", config.adapt.max_epochs);
            read_key(adaptation, "warm_start", config.warm_start);
        }
        read_key(document, "variants", config.variants);
        read_key(document, "threads", config.threads);
        read_key(document, "output_dir", config.output_dir);
        read_key(document, "run_label", config.run_label);
    } catch (const nlohmann::json::exception& error) {
        throw ConfigError(std::string("bad config value: ") + error.what());
    }
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    nlohmann::json document;
    try {
        in >> document;
    } catch (const nlohmann::json::exception& error) {
        throw ConfigError("config file " + path + " is not valid JSON: " + error.what());
    }
    apply_json(base, document);
    return base;
}

nlohmann::json to_json(const ExperimentConfig& config) {
    nlohmann::json doc;
    doc["source"] = config.source;
    doc["synth"] = {
        {"patients", config.synth.num_patients},
        {"events", config.synth.num_events},
        {"targets", config.synth.num_targets},
        {"regimes", config.synth.num_regimes},
        {"hazard", config.synth.switch_hazard},
        {"min_steps", config.synth.min_steps},
        {"max_steps", config.synth.max_steps},
        {"seed", config.synth.seed},
        {"shared_events", config.synth_shared_events},
        {"shared_rate", config.synth_shared_rate},
        {"home_rate", config.synth_home_rate},
        {"away_rate", config.synth_away_rate},
    };
    if (!config.synth.regime_profiles.empty()) {
        doc["synth"]["profiles"] = config.synth.regime_profiles;
    }
    doc["ingest"] = {{"events", config.events_path},
                     {"ranges", config.ranges_path},
                     {"include", config.include_path},
                     {"min_patients", config.min_patients}};
    doc["window_hours"] = config.window_hours;
    doc["split"] = {{"train_fraction", config.train_fraction},
                    {"valid_fraction", config.valid_fraction},
                    {"seed", config.split_seed}};
    doc["model"] = {{"embed_dim", config.training.embed_dim},
                    {"hidden_dim", config.training.hidden_dim}};
    doc["training"] = {{"learning_rate", config.training.learning_rate},
                       {"batch_size", config.training.batch_size},
                       {"max_epochs", config.training.max_epochs},
                       {"patience", config.training.patience},
                       {"lambda_grid", config.training.lambda_grid},
                       {"seed", config.train_seed}};
    doc["adaptation"] = {{"gamma", config.adapt.gamma},
                         {"epsilon", config.adapt.epsilon},
                         {"learning_rate", config.adapt.learning_rate},
                         {"max_epochs", config.adapt.max_epochs},
                         {"warm_start", config.warm_start}};
    doc["variants"] = config.variants;
    doc["seed"] = config.seed;
    doc["threads"] = config.threads;
    doc["output_dir"] = config.output_dir;
    doc["run_label"] = config.run_label;
    return doc;
}

std::string config_hash(const ExperimentConfig& config) {
    Fnv1a64 hash;
    hash.update(to_json(config).dump());
    return to_hex(hash.digest());
}

std::string resolve_run_dir(const ExperimentConfig& config) {
    std::string label = config.run_label;
    if (label.empty()) label = utc_stamp() + "-" + config_hash(config).substr(0, 8);
    return config.output_dir + "/" + label;
}

std::string cohort_path(const std::string& run_dir) { return run_dir + "/cohort.json"; }
std::string checkpoint_path(const std::string& run_dir) { return run_dir + "/model.bin"; }
std::string predictions_path(const std::string& run_dir) {
    return run_dir + "/predictions.jsonl";
}
std::string traces_path(const std::string& run_dir) { return run_dir + "/switch_traces.json"; }

void cmd_prepare(const ExperimentConfig& config, const std::string& run_dir) {
    config.validate();
    const Stopwatch total;
    std::filesystem::create_directories(run_dir);

    std::map<std::string, std::string> inputs;
    std::map<std::string, double> timings;
    CohortArchive archive;
    archive.window_hours = config.window_hours;

    if (config.source == "synth") {
        const SynthConfig synth = resolved_synth(config);
        const Stopwatch watch;
        SynthCohort cohort = synthesize_cohort(synth);
        timings["synthesize"] = watch.ms();
        archive.vocabulary = std::move(cohort.vocabulary);
        SplitResult split =
            split_by_patient(cohort.sequences, config.train_fraction, config.split_seed);
        archive.train = std::move(split.train);
        archive.test = std::move(split.test);
    } else {
        inputs[config.events_path] = file_hash_hex(config.events_path);
        const Stopwatch watch;
        IngestResult result = ingest(config.events_path);
        timings["ingest"] = watch.ms();
        if (!result.issues.empty()) {
            const std::string path = run_dir + "/ingest_issues.csv";
            std::ofstream out(path, std::ios::trunc);
            if (!out) throw IoError("cannot write ingest issue log: " + path);
            out << "line,message\n";
            for (const IngestIssue& issue : result.issues) {
                out << issue.line << ',' << csv_quote(issue.message) << '\n';
            }
        }

        VocabularyOptions options;
        options.min_patients = static_cast<std::size_t>(config.min_patients);
        if (!config.ranges_path.empty()) {
            inputs[config.ranges_path] = file_hash_hex(config.ranges_path);
            options.ranges = load_ranges(config.ranges_path);
        }
        if (!config.include_path.empty()) {
            inputs[config.include_path] = file_hash_hex(config.include_path);
            options.physiological_include = load_include_list(config.include_path);
        }
        archive.vocabulary = build_vocabulary(result.events, options);

        WindowizedDataset windows =
            windowize_all(result.events, archive.vocabulary, config.window_hours);
        if (!windows.skipped.empty()) {
            const std::string path = run_dir + "/skipped_patients.csv";
            std::ofstream out(path, std::ios::trunc);
            if (!out) throw IoError("cannot write skip log: " + path);
            out << "patient_id,reason\n";
            for (const auto& [patient, reason] : windows.skipped) {
                out << csv_quote(patient) << ',' << csv_quote(reason) << '\n';
            }
        }
        SplitResult split =
            split_by_patient(windows.sequences, config.train_fraction, config.split_seed);
        archive.train = std::move(split.train);
        archive.test = std::move(split.test);
    }

    const Stopwatch save_watch;
    const std::string cohort_file = cohort_path(run_dir);
    save_cohort(cohort_file, archive);
    timings["save"] = save_watch.ms();
    timings["total"] = total.ms();

    write_manifest(run_dir, "prepare", config, inputs, {output_entry(cohort_file)},
                   timings);
}

void cmd_train(const ExperimentConfig& config, const std::string& run_dir,
               const std::string& cohort_file) {
    config.validate();
    const Stopwatch total;
    std::filesystem::create_directories(run_dir);

    std::map<std::string, double> timings;
    const Stopwatch load_watch;
    CohortArchive archive = load_cohort(cohort_file);
    timings["load"] = load_watch.ms();

    // Hold out a patient-level validation slice from the train side; the
    // test side stays untouched until evaluation.
    SplitResult inner =
        split_by_patient(archive.train, config.valid_fraction, config.train_seed + 1);

    const std::string log_path = run_dir + "/train_log.txt";
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw IoError("cannot write training log: " + log_path);
    const TrainingProgress progress = [&log](const std::string& line) {
        log << line << '\n';
        log.flush();
        std::cout << line << std::endl;
    };

    const Stopwatch train_watch;
    TrainingResult result;
    try {
        result = train_population(inner.train, inner.test, config.training,
                                  config.train_seed, progress);
    } catch (const Error& error) {
        log << "aborted: " << error.what() << '\n';
        throw;
    }
    timings["train"] = train_watch.ms();

    const std::string model_file = checkpoint_path(run_dir);
    save_model(model_file, result.params, archive.vocabulary.content_hash());

    nlohmann::json report;
    report["chosen_lambda"] = result.report.chosen_lambda;
    report["best_validation_loss"] = result.report.best_validation_loss;
    report["best_epoch"] = result.report.best_epoch;
    report["seed"] = config.train_seed;
    report["dims"] = {{"embed_dim", config.training.embed_dim},
                      {"hidden_dim", config.training.hidden_dim},
                      {"input_size", archive.vocabulary.input_size()},
                      {"target_size", archive.vocabulary.target_size()}};
    report["train_sequences"] = inner.train.size();
    report["validation_sequences"] = inner.test.size();
    nlohmann::json trials = nlohmann::json::array();
    for (const LambdaTrial& trial : result.report.trials) {
        trials.push_back({{"lambda", trial.lambda},
                          {"best_validation_loss", trial.best_validation_loss},
                          {"best_epoch", trial.best_epoch},
                          {"epochs_run", trial.epochs_run},
                          {"validation_losses", trial.validation_losses}});
    }
    report["trials"] = std::move(trials);
    const std::string report_path = run_dir + "/training_report.json";
    std::ofstream report_out(report_path, std::ios::trunc);
    if (!report_out) throw IoError("cannot write training report: " + report_path);
    report_out << report.dump(1) << '\n';

    timings["total"] = total.ms();
    write_manifest(run_dir, "train", config, {{cohort_file, file_hash_hex(cohort_file)}},
                   {output_entry(model_file), output_entry(report_path)}, timings);
}

void cmd_evaluate(const ExperimentConfig& config, const std::string& run_dir,
                  const std::string& cohort_file, const std::string& checkpoint_file) {
    config.validate();
    const Stopwatch total;
    std::filesystem::create_directories(run_dir);

    std::map<std::string, double> timings;
    const Stopwatch load_watch;
    CohortArchive archive = load_cohort(cohort_file);
    LoadedModel model = load_model(checkpoint_file);
    timings["load"] = load_watch.ms();

    if (model.vocab_hash != archive.vocabulary.content_hash()) {
        throw ValidationError("checkpoint " + checkpoint_file +
                              " was trained against a different vocabulary than " +
                              cohort_file);
    }
    if (model.params.dims.input_size != archive.vocabulary.input_size() ||
        model.params.dims.target_size != archive.vocabulary.target_size()) {
        throw ValidationError("checkpoint dimensions do not match the cohort vocabulary");
    }

    VariantSettings settings;
    settings.variants = config.variants;
    settings.adapt = config.adapt;
    settings.warm_start = config.warm_start;
    settings.threads = config.threads;

    const Stopwatch eval_watch;
    VariantOutputs outputs = run_variants(model.params, archive.test, settings);
    timings["evaluate"] = eval_watch.ms();

    const std::string log_file = predictions_path(run_dir);
    save_prediction_log(log_file, outputs.log);
    const std::string trace_file = traces_path(run_dir);
    save_switch_traces(trace_file, outputs.switch_traces);

    const Stopwatch report_watch;
    const EvalReport report = build_report(outputs.log, archive.test, outputs.switch_traces);
    write_report_files(run_dir, report, outputs.switch_traces);
    timings["report"] = report_watch.ms();
    timings["total"] = total.ms();

    std::map<std::string, std::string> output_hashes = {
        output_entry(log_file),
        output_entry(trace_file),
    };
    for (const char* name :
         {"report.json", "table_overall.csv", "per_timestep_auprc.csv",
          "table_repetitive.csv", "patients_per_timestep.csv", "switch_ratio.csv"}) {
        output_hashes[name] = file_hash_hex(run_dir + "/" + name);
    }
    for (const auto& [tag, trace_list] : outputs.switch_traces) {
        output_hashes.insert(output_entry(run_dir + "/switch_trace_" + tag + ".tsv"));
    }
    write_manifest(run_dir, "evaluate", config,
                   {{cohort_file, file_hash_hex(cohort_file)},
                    {checkpoint_file, file_hash_hex(checkpoint_file)}},
                   output_hashes, timings);
}

void cmd_report(const ExperimentConfig& config, const std::string& run_dir) {
    config.validate();
    const Stopwatch total;

    const std::string cohort_file = cohort_path(run_dir);
    const std::string log_file = predictions_path(run_dir);
    const std::string trace_file = traces_path(run_dir);

    CohortArchive archive = load_cohort(cohort_file);
    PredictionLog log = load_prediction_log(log_file);
    std::map<std::string, std::vector<SwitchTrace>> traces;
    if (std::filesystem::exists(trace_file)) traces = load_switch_traces(trace_file);

    const EvalReport report = build_report(log, archive.test, traces);
    write_report_files(run_dir, report, traces);

    std::map<std::string, std::string> inputs = {
        {cohort_file, file_hash_hex(cohort_file)},
        {log_file, file_hash_hex(log_file)},
    };
    if (std::filesystem::exists(trace_file)) inputs[trace_file] = file_hash_hex(trace_file);
    std::map<std::string, std::string> outputs = {
        output_entry(run_dir + "/report.json"),
        output_entry(run_dir + "/table_overall.csv"),
    };
    write_manifest(run_dir, "report", config, inputs, outputs,
                   {{"total", total.ms()}});
}

} // namespace seqadapt
