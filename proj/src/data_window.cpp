#include <algorithm>
#include <cmath>

#include "seqadapt/data.hpp"
#include "seqadapt/errors.hpp"
#include "seqadapt/rng.hpp"

namespace seqadapt {

WindowizeResult windowize(std::span<const RawEvent> patient_events,
                          const EventVocabulary& vocab, double window_hours) {
    if (window_hours <= 0.0) throw ValidationError("window length must be positive");
    WindowizeResult result;
    if (patient_events.empty()) {
        result.skip_reason = "no events";
        return result;
    }
    const std::string& patient_id = patient_events.front().patient_id;
    for (std::size_t i = 0; i < patient_events.size(); ++i) {
        if (patient_events[i].patient_id != patient_id) {
            throw ValidationError("windowize received events from more than one patient");
        }
        if (i > 0 &&
            patient_events[i].time_seconds < patient_events[i - 1].time_seconds) {
            throw ValidationError("windowize requires time-sorted events");
        }
    }
    const std::int64_t start = patient_events.front().time_seconds;
    const auto window_seconds = static_cast<std::int64_t>(window_hours * 3600.0);
    const std::int64_t span = patient_events.back().time_seconds - start;
    const int total_windows = static_cast<int>(span / window_seconds) + 1;
    if (total_windows < 2) {
        result.skip_reason = "events span fewer than two windows";
        return result;
    }

    // Active coordinates per window, as index sets; duplicates collapse in
    // the BinaryVec constructor.
    std::vector<std::vector<std::int32_t>> input_active(
        static_cast<std::size_t>(total_windows));
    std::vector<std::vector<std::int32_t>> target_active(
        static_cast<std::size_t>(total_windows));
    for (const RawEvent& event : patient_events) {
        const auto window = static_cast<std::size_t>((event.time_seconds - start) /
                                                     window_seconds);
        const std::string family = family_key(event);
        const std::int32_t target = vocab.target_coordinate(family);
        if (target >= 0) target_active[window].push_back(target);
        std::int32_t input = -1;
        if (vocab.continuous_families.contains(family)) {
            // Occurrence of a continuous family without a value still counts
            // toward the target; only the discretized input needs the value.
            if (event.value) input = vocab.input_coordinate(discretize(event, vocab.ranges));
        } else {
            input = vocab.input_coordinate(family);
        }
        if (input >= 0) input_active[window].push_back(input);
    }

    EventSequence seq;
    seq.patient_id = patient_id;
    seq.window_hours = window_hours;
    seq.inputs.reserve(static_cast<std::size_t>(total_windows));
    for (int w = 0; w < total_windows; ++w) {
        seq.inputs.emplace_back(vocab.input_size(), input_active[static_cast<std::size_t>(w)]);
        if (w >= 1) {
            seq.targets.emplace_back(vocab.target_size(),
                                     target_active[static_cast<std::size_t>(w)]);
        }
    }
    seq.validate(vocab.input_size(), vocab.target_size());
    result.sequence = std::move(seq);
    return result;
}

WindowizedDataset windowize_all(const std::vector<RawEvent>& events,
                                const EventVocabulary& vocab, double window_hours) {
    WindowizedDataset out;
    std::size_t begin = 0;
    while (begin < events.size()) {
        std::size_t end = begin;
        while (end < events.size() && events[end].patient_id == events[begin].patient_id) {
            ++end;
        }
        WindowizeResult one = windowize(
            std::span(events).subspan(begin, end - begin), vocab, window_hours);
        if (one.sequence) {
            out.sequences.push_back(std::move(*one.sequence));
        } else {
            out.skipped.emplace_back(events[begin].patient_id, one.skip_reason);
        }
        begin = end;
    }
    return out;
}

SplitResult split_by_patient(const Dataset& dataset, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw ValidationError("split ratio must be strictly between 0 and 1");
    }
    std::vector<std::string> patient_ids;
    patient_ids.reserve(dataset.size());
    for (const EventSequence& seq : dataset) patient_ids.push_back(seq.patient_id);
    std::sort(patient_ids.begin(), patient_ids.end());
    if (std::adjacent_find(patient_ids.begin(), patient_ids.end()) != patient_ids.end()) {
        throw ValidationError("duplicate patient id in dataset");
    }
    if (patient_ids.size() < 2) {
        throw ValidationError("patient-level split needs at least 2 patients");
    }

    Rng rng(seed);
    rng.shuffle(patient_ids);
    const auto train_count = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(patient_ids.size())));
    if (train_count == 0 || train_count == patient_ids.size()) {
        throw ValidationError("split ratio leaves one side empty");
    }
    std::set<std::string> train_ids(patient_ids.begin(),
                                    patient_ids.begin() + static_cast<std::ptrdiff_t>(train_count));

    SplitResult result;
    for (const EventSequence& seq : dataset) {
        (train_ids.contains(seq.patient_id) ? result.train : result.test).push_back(seq);
    }
    return result;
}

} // namespace seqadapt
