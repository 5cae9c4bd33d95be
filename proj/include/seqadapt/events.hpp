#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqadapt/errors.hpp"

namespace seqadapt {

// Fixed-size binary vector stored as its sorted set of active indices.
class BinaryVec {
public:
    BinaryVec() = default;
    BinaryVec(std::size_t size, std::vector<std::int32_t> active);

    static BinaryVec zeros(std::size_t size) { return BinaryVec(size, {}); }

    std::size_t size() const { return size_; }
    const std::vector<std::int32_t>& active() const { return active_; }
    bool test(std::int32_t index) const;
    std::vector<double> dense() const;

    bool operator==(const BinaryVec&) const = default;

private:
    std::size_t size_ = 0;
    std::vector<std::int32_t> active_;
};

enum class EventCategory { kMedication, kProcedure, kLab, kPhysiological };

std::optional<EventCategory> parse_category(std::string_view text);
std::string_view to_string(EventCategory category);

struct RawEvent {
    std::string patient_id;
    std::int64_t time_seconds = 0; // seconds since epoch, no timezone
    EventCategory category = EventCategory::kMedication;
    std::string event_type;
    std::optional<double> value;
};

// "category:event_type"; uniquely identifies an event family.
std::string family_key(EventCategory category, const std::string& event_type);
std::string family_key(const RawEvent& event);

struct ValueRange {
    double low = 0.0;
    double high = 0.0;
};

// Index maps for the model's input and target spaces. Continuous-valued
// families contribute three input entries (family_LOW/_NORMAL/_HIGH) and a
// single occurrence-only target entry; discrete families contribute one of
// each. Names are kept sorted so index assignment is reproducible.
struct EventVocabulary {
    std::vector<std::string> input_names;
    std::vector<std::string> target_names;
    std::map<std::string, ValueRange> ranges;  // keyed by event_type
    std::set<std::string> continuous_families; // family keys

    std::size_t input_size() const { return input_names.size(); }
    std::size_t target_size() const { return target_names.size(); }

    // Call after filling the name lists.
    void rebuild_index();

    // -1 when the name is not part of the vocabulary.
    std::int32_t input_coordinate(const std::string& name) const;
    std::int32_t target_coordinate(const std::string& family) const;

    std::uint64_t content_hash() const;

private:
    std::unordered_map<std::string, std::int32_t> input_index_;
    std::unordered_map<std::string, std::int32_t> target_index_;
};

// One patient's windowed sequence. inputs[i] is the event vector of window
// i+1 (1-based windows y_1..y_T); targets[i] is the occurrence vector of
// window i+2, i.e. the prediction target after observing inputs[0..i].
struct EventSequence {
    std::string patient_id;
    std::vector<BinaryVec> inputs;
    std::vector<BinaryVec> targets;
    double window_hours = 24.0;

    int steps() const { return static_cast<int>(inputs.size()); }

    // Target of the prediction made with history y_1..y_t (1 <= t <= T-1).
    const BinaryVec& target_at(int t) const { return targets[static_cast<std::size_t>(t) - 1]; }

    void validate(std::size_t input_size, std::size_t target_size) const;
};

using Dataset = std::vector<EventSequence>;

// Generator settings for a synthetic cohort: each patient follows a hidden
// Markov regime path and emits events as independent Bernoulli draws from
// the active regime's profile.
struct SynthConfig {
    int num_patients = 100;
    int num_events = 24;
    int num_targets = 16;
    int num_regimes = 2;
    std::vector<std::vector<double>> regime_profiles; // [regime][event]
    double switch_hazard = 0.05;
    int min_steps = 4;
    int max_steps = 20;
    std::uint64_t seed = 1;
};

struct SynthCohort {
    Dataset sequences;
    EventVocabulary vocabulary;
    std::vector<std::vector<int>> regime_paths; // per patient, per step
};

} // namespace seqadapt
