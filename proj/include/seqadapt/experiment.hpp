#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "seqadapt/adaptation.hpp"
#include "seqadapt/data.hpp"
#include "seqadapt/eval.hpp"
#include "seqadapt/training.hpp"

namespace seqadapt {

inline constexpr const char* kToolVersion = "0.1.0";

// Everything one experiment run needs, resolvable from (preset, config
// file, flag overrides) with that precedence, lowest first.
struct ExperimentConfig {
    // Data source: a generated cohort or an event file on disk.
    std::string source = "synth"; // "synth" | "ingest"

    SynthConfig synth; // regime_profiles may stay empty: built from the knobs below
    int synth_shared_events = 8;
    double synth_shared_rate = 0.25;
    double synth_home_rate = 0.55;
    double synth_away_rate = 0.03;

    std::string events_path;  // .csv or .jsonl event stream
    std::string ranges_path;  // normal ranges for value-carrying families
    std::string include_path; // physiological include list
    int min_patients = 1;

    double window_hours = 24.0;
    double train_fraction = 0.8;  // patient-level train/test split
    double valid_fraction = 0.85; // of the train side kept for gradient updates
    std::uint64_t split_seed = 2;

    TrainingConfig training; // embedding/hidden dims live here
    std::uint64_t train_seed = 3;

    AdaptationConfig adapt;
    bool warm_start = false;
    std::vector<std::string> variants = {"GRU-POP",   "GRU-IN",    "GRU-IN-AO",
                                         "GRU-IN-AT", "GRU-IN-SW", "GRU-IN-AO-SW"};

    std::uint64_t seed = 1; // master seed; see apply_master_seed
    int threads = 1;
    std::string output_dir = "runs";
    std::string run_label; // empty: timestamp + config-hash prefix

    // Re-derives the per-stage seeds (synth=seed, split=seed+1,
    // train=seed+2); explicit per-stage settings applied afterwards win.
    void apply_master_seed(std::uint64_t value);

    void validate() const;
};

// Named baseline configurations: "desk" (synthetic cohort sized for a
// laptop-scale run) and "paper" (full-scale hyperparameters, data paths
// left for the caller).
ExperimentConfig preset_config(std::string_view name);

// Overlays a JSON document onto `config`; unknown keys are configuration
// errors so typos fail loudly.
void apply_json(ExperimentConfig& config, const nlohmann::json& document);

// preset/defaults -> file; returns the overlaid config.
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base);

nlohmann::json to_json(const ExperimentConfig& config);

// FNV-1a over the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

// <output_dir>/<run_label>, inventing "<UTC stamp>-<hash prefix>" when no
// label is set. Does not create the directory.
std::string resolve_run_dir(const ExperimentConfig& config);

// Artifact locations inside a run directory.
std::string cohort_path(const std::string& run_dir);
std::string checkpoint_path(const std::string& run_dir);
std::string predictions_path(const std::string& run_dir);
std::string traces_path(const std::string& run_dir);

// Ingests or synthesizes, builds the vocabulary, windowizes, splits, and
// writes cohort.json (+ skip/issue logs and the manifest) into run_dir.
void cmd_prepare(const ExperimentConfig& config, const std::string& run_dir);

// Trains the population model on the cohort's train side (with an internal
// validation split) and writes model.bin, training_report.json, and a live
// train_log.txt that survives aborted runs.
void cmd_train(const ExperimentConfig& config, const std::string& run_dir,
               const std::string& cohort_file);

// Runs the configured variants over the cohort's test side and writes the
// prediction log, switch traces, and all report tables.
void cmd_evaluate(const ExperimentConfig& config, const std::string& run_dir,
                  const std::string& cohort_file, const std::string& checkpoint_file);

// Rebuilds the report tables from a saved prediction log without re-running
// adaptation.
void cmd_report(const ExperimentConfig& config, const std::string& run_dir);

} // namespace seqadapt
