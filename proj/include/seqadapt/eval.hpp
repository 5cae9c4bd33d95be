#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqadapt/adaptation.hpp"
#include "seqadapt/model.hpp"
#include "seqadapt/switching.hpp"

namespace seqadapt {

// One scored prediction: model `tag` predicted `scores` for the events of
// step `step`+1 after observing steps 1..`step`; `labels` is the realized
// target vector.
struct PredictionRecord {
    std::string patient_id;
    int step = 0;
    std::string tag;
    std::vector<double> scores;
    BinaryVec labels;
};

using PredictionLog = std::vector<PredictionRecord>;

// Area under the precision-recall curve in the average-precision form:
// sum over descending-score groups of (recall increment) * precision, with
// tied scores entering as one group. Throws when no label is positive.
double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Same, but returns nothing when the metric is undefined (no positives).
std::optional<double> try_auprc(std::span<const double> scores,
                                std::span<const std::uint8_t> labels);

struct TaggedPredictor {
    std::string tag;
    // Probabilities for step t+1 given the sequence's first t inputs.
    std::function<Tensor1(const EventSequence&, int)> predict;
};

// Runs every predictor at every step t = 2..T-1 of every test sequence and
// logs predictions against the realized targets.
PredictionLog evaluate_models(const Dataset& test,
                              const std::vector<TaggedPredictor>& models);

struct TimestepSeries {
    std::map<int, double> by_step;
    std::vector<int> omitted_steps; // steps with no positive labels
};

// Micro-pooled AUPRC per step index, per model tag.
std::map<std::string, TimestepSeries> per_timestep_auprc(const PredictionLog& log);

struct GroupAuprc {
    std::optional<double> repetitive;
    std::optional<double> non_repetitive;
    std::size_t repetitive_pairs = 0;
    std::size_t non_repetitive_pairs = 0;
};

// Splits every scored (patient, step, event) pair by whether the event's
// target coordinate was already 1 at any earlier target step of the same
// patient, then micro-pools AUPRC within each group.
std::map<std::string, GroupAuprc> repetitive_split(const PredictionLog& log,
                                                   const Dataset& sequences);

// Number of patients whose sequence reaches each step index (T >= step).
std::map<int, int> patients_per_timestep(const Dataset& dataset);

// --- variant driver ----------------------------------------------------

inline constexpr std::array<const char*, 6> kVariantNames = {
    "GRU-POP", "GRU-IN", "GRU-IN-AO", "GRU-IN-AT", "GRU-IN-SW", "GRU-IN-AO-SW",
};

bool is_variant_name(std::string_view name);

struct VariantSettings {
    std::vector<std::string> variants; // subset of kVariantNames
    AdaptationConfig adapt;            // mask mode is set per variant
    bool warm_start = false; // reuse the previous step's fine-tuned model as the base
    int threads = 1;

    void validate() const;
};

struct VariantOutputs {
    PredictionLog log; // canonical order: patient, then step, then variant
    std::map<std::string, std::vector<SwitchTrace>> switch_traces; // per switcher tag
};

// Evaluates the configured variants over the test set, sharing each step's
// fine-tuned models between the variants that need them. Patients are
// processed by a worker pool; outputs are slot-ordered, so the thread count
// never changes the result.
VariantOutputs run_variants(const ModelParameters& population, const Dataset& test,
                            const VariantSettings& settings);

// --- report ------------------------------------------------------------

struct EvalReport {
    std::vector<std::string> tags; // canonical order
    std::map<std::string, double> mean_over_steps; // headline: mean of per-step AUPRCs
    std::map<std::string, double> micro_overall;   // all pairs pooled
    std::map<std::string, std::optional<double>> macro_events; // mean of per-event AUPRCs
    std::map<std::string, TimestepSeries> per_step;
    std::map<std::string, GroupAuprc> groups;
    std::map<int, int> patients_per_step;
    double fraction_longer_than_13 = 0.0; // patients with T > 13 steps
    std::map<std::string, std::map<int, SwitchRatioPoint>> switch_ratios;
};

EvalReport build_report(const PredictionLog& log, const Dataset& test,
                        const std::map<std::string, std::vector<SwitchTrace>>& traces);

// Writes report.json plus one delimited table per analysis into `dir`
// (created if missing): table_overall.csv, per_timestep_auprc.csv,
// table_repetitive.csv, patients_per_timestep.csv, switch_ratio.csv, and
// switch_trace_<variant>.tsv.
void write_report_files(const std::string& dir, const EvalReport& report,
                        const std::map<std::string, std::vector<SwitchTrace>>& traces);

void save_prediction_log(const std::string& path, const PredictionLog& log);
PredictionLog load_prediction_log(const std::string& path);

void save_switch_traces(const std::string& path,
                        const std::map<std::string, std::vector<SwitchTrace>>& traces);
std::map<std::string, std::vector<SwitchTrace>> load_switch_traces(const std::string& path);

} // namespace seqadapt
