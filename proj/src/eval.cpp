#include "seqadapt/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include <json.hpp>

#include "seqadapt/errors.hpp"

namespace seqadapt {

namespace {

struct PairPool {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;

    void add(double score, bool positive) {
        scores.push_back(score);
        labels.push_back(positive ? 1 : 0);
    }
};

std::optional<double> pool_auprc(const PairPool& pool) {
    return try_auprc(pool.scores, pool.labels);
}

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.10g", value);
    return buffer;
}

std::ofstream open_table(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open report file for writing: " + path.string());
    return out;
}

} // namespace

std::optional<double> try_auprc(std::span<const double> scores,
                                std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw DimensionError("auprc: " + std::to_string(scores.size()) + " scores vs " +
                             std::to_string(labels.size()) + " labels");
    }
    std::size_t positives = 0;
    for (std::uint8_t label : labels) positives += label != 0;
    if (positives == 0) return std::nullopt;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // Walk distinct-score groups from the top; a whole tie group enters the
    // ranking at once, so ties cannot inflate the area.
    double area = 0.0;
    std::size_t true_positives = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double group_score = scores[order[i]];
        std::size_t j = i;
        std::size_t group_positives = 0;
        while (j < order.size() && scores[order[j]] == group_score) {
            group_positives += labels[order[j]] != 0;
            ++j;
        }
        const double recall_before =
            static_cast<double>(true_positives) / static_cast<double>(positives);
        true_positives += group_positives;
        const double recall =
            static_cast<double>(true_positives) / static_cast<double>(positives);
        const double precision =
            static_cast<double>(true_positives) / static_cast<double>(j);
        area += (recall - recall_before) * precision;
        i = j;
    }
    return area;
}

double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const std::optional<double> value = try_auprc(scores, labels);
    if (!value) {
        throw ValidationError("precision-recall area is undefined without positive labels");
    }
    return *value;
}

PredictionLog evaluate_models(const Dataset& test,
                              const std::vector<TaggedPredictor>& models) {
    PredictionLog log;
    for (const EventSequence& seq : test) {
        for (int t = 2; t <= seq.steps() - 1; ++t) {
            for (const TaggedPredictor& model : models) {
                Tensor1 probs = model.predict(seq, t);
                if (probs.length() != seq.target_at(t).size()) {
                    throw ValidationError("predictor '" + model.tag + "' returned " +
                                          std::to_string(probs.length()) +
                                          " scores for a target of size " +
                                          std::to_string(seq.target_at(t).size()));
                }
                PredictionRecord record;
                record.patient_id = seq.patient_id;
                record.step = t;
                record.tag = model.tag;
                record.scores.assign(probs.flat().begin(), probs.flat().end());
                record.labels = seq.target_at(t);
                log.push_back(std::move(record));
            }
        }
    }
    return log;
}

std::map<std::string, TimestepSeries> per_timestep_auprc(const PredictionLog& log) {
    std::map<std::string, std::map<int, PairPool>> pools;
    for (const PredictionRecord& record : log) {
        PairPool& pool = pools[record.tag][record.step];
        const std::vector<double> labels = record.labels.dense();
        for (std::size_t k = 0; k < record.scores.size(); ++k) {
            pool.add(record.scores[k], labels[k] != 0.0);
        }
    }
    std::map<std::string, TimestepSeries> series;
    for (const auto& [tag, by_step] : pools) {
        TimestepSeries& entry = series[tag];
        for (const auto& [step, pool] : by_step) {
            if (const auto value = pool_auprc(pool)) {
                entry.by_step[step] = *value;
            } else {
                entry.omitted_steps.push_back(step);
            }
        }
    }
    return series;
}

std::map<std::string, GroupAuprc> repetitive_split(const PredictionLog& log,
                                                   const Dataset& sequences) {
    std::map<std::string, const EventSequence*> by_id;
    for (const EventSequence& seq : sequences) by_id[seq.patient_id] = &seq;

    // seen_by[i][k]: event k occurred in some target step <= i+2, i.e. in
    // targets[0..i]. A record at step t predicts step t+1; its "previously
    // seen" set is targets[0..t-2] (empty for t < 2).
    std::map<std::string, std::vector<std::vector<std::uint8_t>>> seen_by;
    auto seen_for = [&](const EventSequence& seq)
        -> const std::vector<std::vector<std::uint8_t>>& {
        auto [it, fresh] = seen_by.try_emplace(seq.patient_id);
        if (fresh) {
            std::vector<std::uint8_t> running(seq.targets.front().size(), 0);
            for (const BinaryVec& target : seq.targets) {
                for (std::int32_t k : target.active()) {
                    running[static_cast<std::size_t>(k)] = 1;
                }
                it->second.push_back(running);
            }
        }
        return it->second;
    };

    std::map<std::string, std::pair<PairPool, PairPool>> pools; // repetitive, novel
    for (const PredictionRecord& record : log) {
        const auto found = by_id.find(record.patient_id);
        if (found == by_id.end()) {
            throw ValidationError("prediction log references unknown patient " +
                                  record.patient_id);
        }
        const EventSequence& seq = *found->second;
        if (record.step < 1 || record.step > seq.steps() - 1) {
            throw ValidationError("prediction log step " + std::to_string(record.step) +
                                  " is out of range for patient " + record.patient_id);
        }
        const auto& seen = seen_for(seq);
        const std::vector<std::uint8_t>* prior =
            record.step >= 2 ? &seen[static_cast<std::size_t>(record.step) - 2] : nullptr;
        auto& [repetitive, novel] = pools[record.tag];
        const std::vector<double> labels = record.labels.dense();
        for (std::size_t k = 0; k < record.scores.size(); ++k) {
            PairPool& pool = (prior && (*prior)[k] != 0) ? repetitive : novel;
            pool.add(record.scores[k], labels[k] != 0.0);
        }
    }

    std::map<std::string, GroupAuprc> out;
    for (const auto& [tag, pair] : pools) {
        GroupAuprc& group = out[tag];
        group.repetitive = pool_auprc(pair.first);
        group.non_repetitive = pool_auprc(pair.second);
        group.repetitive_pairs = pair.first.scores.size();
        group.non_repetitive_pairs = pair.second.scores.size();
    }
    return out;
}

std::map<int, int> patients_per_timestep(const Dataset& dataset) {
    std::map<int, int> counts;
    for (const EventSequence& seq : dataset) {
        for (int step = 1; step <= seq.steps(); ++step) ++counts[step];
    }
    return counts;
}

bool is_variant_name(std::string_view name) {
    return std::find(kVariantNames.begin(), kVariantNames.end(), name) != kVariantNames.end();
}

void VariantSettings::validate() const {
    if (variants.empty()) throw ValidationError("no model variants configured");
    for (const std::string& name : variants) {
        if (!is_variant_name(name)) {
            throw ValidationError("unknown model variant '" + name + "'");
        }
    }
    adapt.validate();
    if (threads < 1) throw ValidationError("worker count must be at least 1");
}

namespace {

bool is_switcher(std::string_view name) {
    return name == "GRU-IN-SW" || name == "GRU-IN-AO-SW";
}

struct PatientOutput {
    PredictionLog records;
    std::map<std::string, SwitchTrace> traces;
};

} // namespace

VariantOutputs run_variants(const ModelParameters& population, const Dataset& test,
                            const VariantSettings& settings) {
    settings.validate();
    for (const EventSequence& seq : test) {
        seq.validate(population.dims.input_size, population.dims.target_size);
    }

    // Canonical variant order, duplicates collapsed.
    std::vector<std::string> variants;
    for (const char* name : kVariantNames) {
        if (std::find(settings.variants.begin(), settings.variants.end(), name) !=
            settings.variants.end()) {
            variants.push_back(name);
        }
    }
    const bool need_all =
        std::find(variants.begin(), variants.end(), "GRU-IN") != variants.end() ||
        std::find(variants.begin(), variants.end(), "GRU-IN-SW") != variants.end();
    const bool need_ao =
        std::find(variants.begin(), variants.end(), "GRU-IN-AO") != variants.end() ||
        std::find(variants.begin(), variants.end(), "GRU-IN-AO-SW") != variants.end();
    const bool need_at =
        std::find(variants.begin(), variants.end(), "GRU-IN-AT") != variants.end();

    std::vector<PatientOutput> slots(test.size());
    auto process_patient = [&](std::size_t index) {
        const EventSequence& seq = test[index];
        PatientOutput& out = slots[index];
        for (const std::string& name : variants) {
            if (is_switcher(name)) out.traces[name].patient_id = seq.patient_id;
        }

        AdaptationConfig config = settings.adapt;
        // Warm-start bases; only used when the flag is on.
        std::optional<ModelParameters> warm_all, warm_ao, warm_at;
        // The switchers judge the patient-specific model on its track
        // record: the candidate at step t is the model fine-tuned after
        // step t-1, so the newest (heaviest-weighted) history term is one
        // neither candidate was fitted on. Before the first decision there
        // is no fine-tuned model, which makes the comparison an exact tie.
        std::optional<ModelParameters> prev_all, prev_ao;
        for (int t = 2; t <= seq.steps() - 1; ++t) {
            std::optional<ModelParameters> tuned_all, tuned_ao, tuned_at;
            if (need_all) {
                config.mask_mode = MaskMode::kAll;
                const ModelParameters& base =
                    settings.warm_start && warm_all ? *warm_all : population;
                tuned_all = adapt(base, seq, t, config).params;
                if (settings.warm_start) warm_all = *tuned_all;
            }
            if (need_ao) {
                config.mask_mode = MaskMode::kOutputOnly;
                const ModelParameters& base =
                    settings.warm_start && warm_ao ? *warm_ao : population;
                tuned_ao = adapt(base, seq, t, config).params;
                if (settings.warm_start) warm_ao = *tuned_ao;
            }
            if (need_at) {
                config.mask_mode = MaskMode::kTransitionOnly;
                const ModelParameters& base =
                    settings.warm_start && warm_at ? *warm_at : population;
                tuned_at = adapt(base, seq, t, config).params;
                if (settings.warm_start) warm_at = *tuned_at;
            }

            const auto history = std::span(seq.inputs).first(static_cast<std::size_t>(t));
            for (const std::string& name : variants) {
                PredictionRecord record;
                record.patient_id = seq.patient_id;
                record.step = t;
                record.tag = name;
                record.labels = seq.target_at(t);
                Tensor1 probs;
                if (name == "GRU-POP") {
                    probs = predict_next(population, history);
                } else if (name == "GRU-IN") {
                    probs = predict_next(*tuned_all, history);
                } else if (name == "GRU-IN-AO") {
                    probs = predict_next(*tuned_ao, history);
                } else if (name == "GRU-IN-AT") {
                    probs = predict_next(*tuned_at, history);
                } else {
                    const std::optional<ModelParameters>& prev =
                        name == "GRU-IN-SW" ? prev_all : prev_ao;
                    SwitchDecision decision = switch_predict(
                        population, prev ? *prev : population, seq, t, settings.adapt.gamma);
                    probs = decision.prediction;
                    out.traces[name].decisions.push_back(std::move(decision));
                }
                record.scores.assign(probs.flat().begin(), probs.flat().end());
                out.records.push_back(std::move(record));
            }
            if (need_all) prev_all = *tuned_all;
            if (need_ao) prev_ao = *tuned_ao;
        }
    };

    const int workers =
        static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(settings.threads),
                                               std::max<std::size_t>(test.size(), 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < test.size(); ++i) process_patient(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::exception_ptr error;
        auto worker = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= test.size()) return;
                {
                    std::lock_guard lock(error_mutex);
                    if (error) return;
                }
                try {
                    process_patient(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& thread : pool) thread.join();
        if (error) std::rethrow_exception(error);
    }

    // Slot order makes the output independent of scheduling.
    VariantOutputs out;
    for (PatientOutput& slot : slots) {
        for (PredictionRecord& record : slot.records) out.log.push_back(std::move(record));
        for (auto& [tag, trace] : slot.traces) {
            out.switch_traces[tag].push_back(std::move(trace));
        }
    }
    return out;
}

EvalReport build_report(const PredictionLog& log, const Dataset& test,
                        const std::map<std::string, std::vector<SwitchTrace>>& traces) {
    EvalReport report;

    std::set<std::string> seen;
    for (const PredictionRecord& record : log) seen.insert(record.tag);
    for (const char* name : kVariantNames) {
        if (seen.contains(name)) {
            report.tags.push_back(name);
            seen.erase(name);
        }
    }
    report.tags.insert(report.tags.end(), seen.begin(), seen.end());

    report.per_step = per_timestep_auprc(log);
    for (const auto& [tag, series] : report.per_step) {
        if (series.by_step.empty()) continue;
        double sum = 0.0;
        for (const auto& [step, value] : series.by_step) sum += value;
        report.mean_over_steps[tag] = sum / static_cast<double>(series.by_step.size());
    }

    std::map<std::string, PairPool> micro;
    std::map<std::string, std::map<std::size_t, PairPool>> by_event;
    for (const PredictionRecord& record : log) {
        const std::vector<double> labels = record.labels.dense();
        PairPool& pool = micro[record.tag];
        auto& events = by_event[record.tag];
        for (std::size_t k = 0; k < record.scores.size(); ++k) {
            pool.add(record.scores[k], labels[k] != 0.0);
            events[k].add(record.scores[k], labels[k] != 0.0);
        }
    }
    for (const auto& [tag, pool] : micro) {
        if (const auto value = pool_auprc(pool)) report.micro_overall[tag] = *value;
    }
    for (const auto& [tag, events] : by_event) {
        double sum = 0.0;
        int defined = 0;
        for (const auto& [event, pool] : events) {
            if (const auto value = pool_auprc(pool)) {
                sum += *value;
                ++defined;
            }
        }
        report.macro_events[tag] =
            defined > 0 ? std::optional<double>(sum / defined) : std::nullopt;
    }

    report.groups = repetitive_split(log, test);
    report.patients_per_step = patients_per_timestep(test);
    int longer = 0;
    for (const EventSequence& seq : test) longer += seq.steps() > 13;
    report.fraction_longer_than_13 =
        test.empty() ? 0.0 : static_cast<double>(longer) / static_cast<double>(test.size());

    for (const auto& [tag, trace_list] : traces) {
        report.switch_ratios[tag] = switch_ratio(trace_list);
    }
    return report;
}

void write_report_files(const std::string& dir, const EvalReport& report,
                        const std::map<std::string, std::vector<SwitchTrace>>& traces) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);

    {
        std::ofstream out = open_table(base / "table_overall.csv");
        out << "variant,auprc_mean_over_steps,auprc_micro,auprc_macro_events\n";
        for (const std::string& tag : report.tags) {
            out << tag << ',';
            if (const auto it = report.mean_over_steps.find(tag);
                it != report.mean_over_steps.end()) {
                out << format_double(it->second);
            }
            out << ',';
            if (const auto it = report.micro_overall.find(tag);
                it != report.micro_overall.end()) {
                out << format_double(it->second);
            }
            out << ',';
            if (const auto it = report.macro_events.find(tag);
                it != report.macro_events.end() && it->second) {
                out << format_double(*it->second);
            }
            out << '\n';
        }
    }
    {
        std::ofstream out = open_table(base / "per_timestep_auprc.csv");
        out << "variant,step,auprc,status\n";
        for (const std::string& tag : report.tags) {
            const auto it = report.per_step.find(tag);
            if (it == report.per_step.end()) continue;
            std::map<int, std::optional<double>> merged;
            for (const auto& [step, value] : it->second.by_step) merged[step] = value;
            for (int step : it->second.omitted_steps) merged[step] = std::nullopt;
            for (const auto& [step, value] : merged) {
                out << tag << ',' << step << ',';
                if (value) out << format_double(*value);
                out << ',' << (value ? "ok" : "no_positives") << '\n';
            }
        }
    }
    {
        std::ofstream out = open_table(base / "table_repetitive.csv");
        out << "variant,group,pairs,auprc\n";
        for (const std::string& tag : report.tags) {
            const auto it = report.groups.find(tag);
            if (it == report.groups.end()) continue;
            out << tag << ",repetitive," << it->second.repetitive_pairs << ',';
            if (it->second.repetitive) out << format_double(*it->second.repetitive);
            out << '\n';
            out << tag << ",non_repetitive," << it->second.non_repetitive_pairs << ',';
            if (it->second.non_repetitive) out << format_double(*it->second.non_repetitive);
            out << '\n';
        }
    }
    {
        std::ofstream out = open_table(base / "patients_per_timestep.csv");
        out << "step,patients\n";
        for (const auto& [step, patients] : report.patients_per_step) {
            out << step << ',' << patients << '\n';
        }
    }
    {
        std::ofstream out = open_table(base / "switch_ratio.csv");
        out << "variant,step,decisions,patient_specific,ratio\n";
        for (const auto& [tag, ratios] : report.switch_ratios) {
            for (const auto& [step, point] : ratios) {
                out << tag << ',' << step << ',' << point.decisions << ','
                    << point.patient_specific << ',' << format_double(point.ratio) << '\n';
            }
        }
    }
    for (const auto& [tag, trace_list] : traces) {
        std::ofstream out = open_table(base / ("switch_trace_" + tag + ".tsv"));
        out << "patient_id\tstep\tchoice\tpopulation_loss\tpatient_loss\n";
        for (const SwitchTrace& trace : trace_list) out << format_switch_trace(trace);
    }

    nlohmann::json doc;
    doc["tags"] = report.tags;
    doc["mean_over_steps"] = report.mean_over_steps;
    doc["micro_overall"] = report.micro_overall;
    nlohmann::json macro = nlohmann::json::object();
    for (const auto& [tag, value] : report.macro_events) {
        if (value) {
            macro[tag] = *value;
        } else {
            macro[tag] = nullptr;
        }
    }
    doc["macro_events"] = std::move(macro);
    nlohmann::json per_step = nlohmann::json::object();
    for (const auto& [tag, series] : report.per_step) {
        nlohmann::json by_step = nlohmann::json::object();
        for (const auto& [step, value] : series.by_step) {
            by_step[std::to_string(step)] = value;
        }
        per_step[tag] = {{"auprc", std::move(by_step)},
                         {"omitted_steps", series.omitted_steps}};
    }
    doc["per_timestep"] = std::move(per_step);
    nlohmann::json groups = nlohmann::json::object();
    for (const auto& [tag, group] : report.groups) {
        nlohmann::json entry;
        entry["repetitive_pairs"] = group.repetitive_pairs;
        entry["non_repetitive_pairs"] = group.non_repetitive_pairs;
        entry["repetitive"] =
            group.repetitive ? nlohmann::json(*group.repetitive) : nlohmann::json(nullptr);
        entry["non_repetitive"] = group.non_repetitive
                                      ? nlohmann::json(*group.non_repetitive)
                                      : nlohmann::json(nullptr);
        groups[tag] = std::move(entry);
    }
    doc["repetitive_split"] = std::move(groups);
    nlohmann::json per_step_counts = nlohmann::json::object();
    for (const auto& [step, patients] : report.patients_per_step) {
        per_step_counts[std::to_string(step)] = patients;
    }
    doc["patients_per_timestep"] = std::move(per_step_counts);
    doc["fraction_longer_than_13_steps"] = report.fraction_longer_than_13;
    nlohmann::json ratios = nlohmann::json::object();
    for (const auto& [tag, points] : report.switch_ratios) {
        nlohmann::json by_step = nlohmann::json::object();
        for (const auto& [step, point] : points) {
            by_step[std::to_string(step)] = {{"decisions", point.decisions},
                                             {"patient_specific", point.patient_specific},
                                             {"ratio", point.ratio}};
        }
        ratios[tag] = std::move(by_step);
    }
    doc["switch_ratio"] = std::move(ratios);

    std::ofstream out = open_table(base / "report.json");
    out << doc.dump(1) << '\n';
    if (!out) throw IoError("write failure for report.json");
}

void save_prediction_log(const std::string& path, const PredictionLog& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open prediction log for writing: " + path);
    for (const PredictionRecord& record : log) {
        const nlohmann::json line = {
            {"patient_id", record.patient_id}, {"step", record.step},
            {"tag", record.tag},               {"scores", record.scores},
            {"labels", record.labels.active()}, {"label_size", record.labels.size()},
        };
        out << line.dump() << '\n';
    }
    if (!out) throw IoError("write failure for prediction log: " + path);
}

PredictionLog load_prediction_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open prediction log: " + path);
    PredictionLog log;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            const nlohmann::json doc = nlohmann::json::parse(line);
            PredictionRecord record;
            record.patient_id = doc.at("patient_id").get<std::string>();
            record.step = doc.at("step").get<int>();
            record.tag = doc.at("tag").get<std::string>();
            record.scores = doc.at("scores").get<std::vector<double>>();
            record.labels = BinaryVec(doc.at("label_size").get<std::size_t>(),
                                      doc.at("labels").get<std::vector<std::int32_t>>());
            log.push_back(std::move(record));
        } catch (const nlohmann::json::exception& error) {
            throw IoError("bad prediction log line " + std::to_string(line_number) + " in " +
                          path + ": " + error.what());
        }
    }
    return log;
}

void save_switch_traces(const std::string& path,
                        const std::map<std::string, std::vector<SwitchTrace>>& traces) {
    nlohmann::json by_tag = nlohmann::json::object();
    for (const auto& [tag, trace_list] : traces) {
        nlohmann::json list = nlohmann::json::array();
        for (const SwitchTrace& trace : trace_list) {
            nlohmann::json decisions = nlohmann::json::array();
            for (const SwitchDecision& decision : trace.decisions) {
                decisions.push_back(
                    {{"step", decision.step},
                     {"choice", std::string(to_string(decision.chosen))},
                     {"population_loss", decision.population_loss},
                     {"patient_loss", decision.patient_loss},
                     {"prediction", std::vector<double>(decision.prediction.flat().begin(),
                                                        decision.prediction.flat().end())}});
            }
            list.push_back(
                {{"patient_id", trace.patient_id}, {"decisions", std::move(decisions)}});
        }
        by_tag[tag] = std::move(list);
    }
    const nlohmann::json doc = {{"version", 1}, {"traces", std::move(by_tag)}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open switch trace file for writing: " + path);
    out << doc.dump(1) << '\n';
    if (!out) throw IoError("write failure for switch traces: " + path);
}

std::map<std::string, std::vector<SwitchTrace>> load_switch_traces(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open switch trace file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
        std::map<std::string, std::vector<SwitchTrace>> traces;
        for (const auto& [tag, list] : doc.at("traces").items()) {
            for (const auto& entry : list) {
                SwitchTrace trace;
                trace.patient_id = entry.at("patient_id").get<std::string>();
                for (const auto& item : entry.at("decisions")) {
                    SwitchDecision decision;
                    decision.step = item.at("step").get<int>();
                    const std::string choice = item.at("choice").get<std::string>();
                    decision.chosen = choice == "patient_specific"
                                          ? ModelChoice::kPatientSpecific
                                          : ModelChoice::kPopulation;
                    decision.population_loss = item.at("population_loss").get<double>();
                    decision.patient_loss = item.at("patient_loss").get<double>();
                    const auto values = item.at("prediction").get<std::vector<double>>();
                    decision.prediction = Tensor1(values.size());
                    for (std::size_t i = 0; i < values.size(); ++i) {
                        decision.prediction[i] = values[i];
                    }
                    trace.decisions.push_back(std::move(decision));
                }
                traces[tag].push_back(std::move(trace));
            }
        }
        return traces;
    } catch (const nlohmann::json::exception& error) {
        throw IoError("bad switch trace file " + path + ": " + error.what());
    }
}

} // namespace seqadapt
