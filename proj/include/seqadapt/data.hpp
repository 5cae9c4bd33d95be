#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "seqadapt/events.hpp"

namespace seqadapt {

// --- ingestion ---------------------------------------------------------

// Epoch seconds for an ISO-8601 timestamp ("2024-01-02T03:04:05", optional
// fractional seconds and Z/+hh:mm offset; bare dates mean midnight).
std::optional<std::int64_t> parse_iso8601(std::string_view text);

struct IngestIssue {
    std::size_t line = 0;
    std::string message;
};

struct IngestResult {
    std::vector<RawEvent> events; // sorted by (patient_id, timestamp)
    std::vector<IngestIssue> issues;
};

// Reads events from a .csv (header: patient_id,timestamp,category,
// event_type,value) or .jsonl file (same keys per line); the format is
// chosen by extension. Malformed lines are collected in `issues` with their
// line numbers; well-formed lines are always returned.
IngestResult ingest(const std::string& path);

// JSON object mapping event_type to [low, high].
std::map<std::string, ValueRange> load_ranges(const std::string& path);

// Plain-text include list (one event_type per line, # comments) restricting
// which physiological event types enter the vocabulary.
std::set<std::string> load_include_list(const std::string& path);

// --- vocabulary --------------------------------------------------------

struct VocabularyOptions {
    std::size_t min_patients = 1;             // drop families seen in fewer patients
    std::map<std::string, ValueRange> ranges; // normal ranges by event_type
    std::optional<std::set<std::string>> physiological_include;
};

// Input space: discrete families as-is plus _LOW/_NORMAL/_HIGH variants of
// value-carrying families; target space: one occurrence entry per family.
EventVocabulary build_vocabulary(const std::vector<RawEvent>& events,
                                 const VocabularyOptions& options);

// Input name for a value-carrying event: family key + _LOW/_NORMAL/_HIGH,
// with the closed range [low, high] mapping to _NORMAL.
std::string discretize(const RawEvent& event, const std::map<std::string, ValueRange>& ranges);

// --- windowing ---------------------------------------------------------

struct WindowizeResult {
    std::optional<EventSequence> sequence;
    std::string skip_reason; // set when sequence is empty
};

// Collapses one patient's events (sorted by time) into per-window binary
// vectors. Windows are anchored at the first event; window i covers
// [start + (i-1)W, start + iW); empty windows stay as all-zero steps.
WindowizeResult windowize(std::span<const RawEvent> patient_events,
                          const EventVocabulary& vocab, double window_hours = 24.0);

struct WindowizedDataset {
    Dataset sequences;
    std::vector<std::pair<std::string, std::string>> skipped; // patient, reason
};

WindowizedDataset windowize_all(const std::vector<RawEvent>& events,
                                const EventVocabulary& vocab, double window_hours = 24.0);

// --- splitting ---------------------------------------------------------

struct SplitResult {
    Dataset train;
    Dataset test;
};

// Patient-level split: no patient appears in both sets; the train side gets
// floor(ratio * patients).
SplitResult split_by_patient(const Dataset& dataset, double ratio, std::uint64_t seed);

// --- synthetic cohort --------------------------------------------------

void validate_synth_config(const SynthConfig& config);

// Round-robin regime "ownership" profiles: the first num_shared events fire
// at shared_rate in every regime; each remaining event belongs to one regime
// and fires at home_rate there, away_rate elsewhere.
std::vector<std::vector<double>> make_regime_profiles(int num_events, int num_regimes,
                                                      int num_shared, double shared_rate,
                                                      double home_rate, double away_rate);

SynthCohort synthesize_cohort(const SynthConfig& config);

// --- archive -----------------------------------------------------------

struct CohortArchive {
    EventVocabulary vocabulary;
    Dataset train;
    Dataset test;
    double window_hours = 24.0;
    std::uint64_t content_hash = 0; // over vocabulary + sequences
};

std::uint64_t cohort_content_hash(const CohortArchive& archive);

void save_cohort(const std::string& path, CohortArchive& archive); // fills content_hash
CohortArchive load_cohort(const std::string& path);                // verifies content_hash

} // namespace seqadapt
