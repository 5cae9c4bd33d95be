#pragma once

#include <map>
#include <string>
#include <vector>

#include "seqadapt/adaptation.hpp"
#include "seqadapt/model.hpp"

namespace seqadapt {

enum class ModelChoice { kPopulation, kPatientSpecific };

std::string_view to_string(ModelChoice choice);

struct SwitchDecision {
    int step = 0;                         // t: decision made after observing y_1..y_t
    ModelChoice chosen = ModelChoice::kPopulation;
    double population_loss = 0.0;         // discounted history loss of the population model
    double patient_loss = 0.0;            // same for the patient-specific model
    Tensor1 prediction;                   // emitted probabilities for step t+1
};

struct SwitchTrace {
    std::string patient_id;
    std::vector<SwitchDecision> decisions; // step indices strictly increasing
};

// Compares the two models' discounted losses over the observed steps
// i = 1..t-1 and emits the winner's prediction for step t+1. A tie selects
// the patient-specific model.
SwitchDecision switch_predict(const ModelParameters& population,
                              const ModelParameters& patient, const EventSequence& seq,
                              int t, double gamma);

struct SwitchRatioPoint {
    int decisions = 0;
    int patient_specific = 0;
    double ratio = 0.0;
};

// Fraction of patient-specific selections per step index; steps with no
// decisions are omitted.
std::map<int, SwitchRatioPoint> switch_ratio(const std::vector<SwitchTrace>& traces);

// Delimited export: patient_id, t, choice, population loss, patient loss.
std::string format_switch_trace(const SwitchTrace& trace);

} // namespace seqadapt
