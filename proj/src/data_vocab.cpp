#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "seqadapt/data.hpp"
#include "seqadapt/errors.hpp"

namespace seqadapt {

std::string discretize(const RawEvent& event, const std::map<std::string, ValueRange>& ranges) {
    if (!event.value) {
        throw ValidationError("event '" + event.event_type + "' carries no value");
    }
    const auto it = ranges.find(event.event_type);
    if (it == ranges.end()) {
        throw ConfigError("no normal range configured for value-carrying event '" +
                          event.event_type + "'");
    }
    std::string name = family_key(event);
    if (*event.value < it->second.low) {
        name += "_LOW";
    } else if (*event.value > it->second.high) {
        name += "_HIGH";
    } else {
        name += "_NORMAL";
    }
    return name;
}

EventVocabulary build_vocabulary(const std::vector<RawEvent>& events,
                                 const VocabularyOptions& options) {
    if (events.empty()) throw ValidationError("cannot build a vocabulary from zero events");

    // Distinct patients per family, and whether any event of the family
    // carries a numeric value (making it a continuous family).
    std::unordered_map<std::string, std::unordered_set<std::string>> patients_by_family;
    std::unordered_map<std::string, bool> family_has_value;
    for (const RawEvent& event : events) {
        if (options.physiological_include &&
            event.category == EventCategory::kPhysiological &&
            !options.physiological_include->contains(event.event_type)) {
            continue;
        }
        const std::string family = family_key(event);
        patients_by_family[family].insert(event.patient_id);
        family_has_value[family] = family_has_value[family] || event.value.has_value();
    }

    std::unordered_map<std::string, std::string> event_type_by_family;
    for (const RawEvent& event : events) {
        event_type_by_family.emplace(family_key(event), event.event_type);
    }

    EventVocabulary vocab;
    for (const auto& [family, patients] : patients_by_family) {
        if (patients.size() < options.min_patients) continue;
        vocab.target_names.push_back(family);
        if (family_has_value.at(family)) {
            const std::string& event_type = event_type_by_family.at(family);
            const auto range = options.ranges.find(event_type);
            if (range == options.ranges.end()) {
                throw ConfigError("no normal range configured for value-carrying event '" +
                                  event_type + "'");
            }
            vocab.ranges[event_type] = range->second;
            vocab.continuous_families.insert(family);
            vocab.input_names.push_back(family + "_LOW");
            vocab.input_names.push_back(family + "_NORMAL");
            vocab.input_names.push_back(family + "_HIGH");
        } else {
            vocab.input_names.push_back(family);
        }
    }
    if (vocab.target_names.empty()) {
        throw ValidationError("no event family passes the min-patients cutoff of " +
                              std::to_string(options.min_patients));
    }
    std::sort(vocab.input_names.begin(), vocab.input_names.end());
    std::sort(vocab.target_names.begin(), vocab.target_names.end());
    vocab.rebuild_index();
    return vocab;
}

} // namespace seqadapt
