#include "seqadapt/events.hpp"

#include <algorithm>

#include "seqadapt/hash.hpp"

namespace seqadapt {

BinaryVec::BinaryVec(std::size_t size, std::vector<std::int32_t> active)
    : size_(size), active_(std::move(active)) {
    std::sort(active_.begin(), active_.end());
    active_.erase(std::unique(active_.begin(), active_.end()), active_.end());
    for (std::int32_t index : active_) {
        if (index < 0 || static_cast<std::size_t>(index) >= size_) {
            throw ValidationError("binary vector index " + std::to_string(index) +
                                  " out of range for size " + std::to_string(size_));
        }
    }
}

bool BinaryVec::test(std::int32_t index) const {
    return std::binary_search(active_.begin(), active_.end(), index);
}

std::vector<double> BinaryVec::dense() const {
    std::vector<double> out(size_, 0.0);
    for (std::int32_t index : active_) out[static_cast<std::size_t>(index)] = 1.0;
    return out;
}

std::optional<EventCategory> parse_category(std::string_view text) {
    if (text == "medication") return EventCategory::kMedication;
    if (text == "procedure") return EventCategory::kProcedure;
    if (text == "lab") return EventCategory::kLab;
    if (text == "physiological") return EventCategory::kPhysiological;
    return std::nullopt;
}

std::string_view to_string(EventCategory category) {
    switch (category) {
    case EventCategory::kMedication: return "medication";
    case EventCategory::kProcedure: return "procedure";
    case EventCategory::kLab: return "lab";
    case EventCategory::kPhysiological: return "physiological";
    }
    return "unknown";
}

std::string family_key(EventCategory category, const std::string& event_type) {
    std::string key(to_string(category));
    key += ':';
    key += event_type;
    return key;
}

std::string family_key(const RawEvent& event) {
    return family_key(event.category, event.event_type);
}

void EventVocabulary::rebuild_index() {
    input_index_.clear();
    target_index_.clear();
    input_index_.reserve(input_names.size());
    target_index_.reserve(target_names.size());
    for (std::size_t i = 0; i < input_names.size(); ++i) {
        input_index_[input_names[i]] = static_cast<std::int32_t>(i);
    }
    for (std::size_t i = 0; i < target_names.size(); ++i) {
        target_index_[target_names[i]] = static_cast<std::int32_t>(i);
    }
    if (input_index_.size() != input_names.size()) {
        throw ValidationError("duplicate input name in vocabulary");
    }
    if (target_index_.size() != target_names.size()) {
        throw ValidationError("duplicate target name in vocabulary");
    }
}

std::int32_t EventVocabulary::input_coordinate(const std::string& name) const {
    auto it = input_index_.find(name);
    return it == input_index_.end() ? -1 : it->second;
}

std::int32_t EventVocabulary::target_coordinate(const std::string& family) const {
    auto it = target_index_.find(family);
    return it == target_index_.end() ? -1 : it->second;
}

std::uint64_t EventVocabulary::content_hash() const {
    Fnv1a64 hasher;
    hasher.update_u64(input_names.size());
    for (const auto& name : input_names) hasher.update(name);
    hasher.update_u64(target_names.size());
    for (const auto& name : target_names) hasher.update(name);
    hasher.update_u64(ranges.size());
    for (const auto& [event_type, range] : ranges) {
        hasher.update(event_type);
        hasher.update_double(range.low);
        hasher.update_double(range.high);
    }
    hasher.update_u64(continuous_families.size());
    for (const auto& family : continuous_families) hasher.update(family);
    return hasher.digest();
}

void EventSequence::validate(std::size_t input_size, std::size_t target_size) const {
    if (inputs.size() < 2) {
        throw ValidationError("sequence for patient " + patient_id +
                              " has fewer than 2 steps");
    }
    if (targets.size() + 1 != inputs.size()) {
        throw ValidationError("sequence for patient " + patient_id + " has " +
                              std::to_string(inputs.size()) + " inputs but " +
                              std::to_string(targets.size()) + " targets");
    }
    for (const auto& vec : inputs) {
        if (vec.size() != input_size) {
            throw ValidationError("input vector size mismatch for patient " + patient_id);
        }
    }
    for (const auto& vec : targets) {
        if (vec.size() != target_size) {
            throw ValidationError("target vector size mismatch for patient " + patient_id);
        }
    }
}

} // namespace seqadapt
