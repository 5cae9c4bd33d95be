#include "seqadapt/switching.hpp"

#include <sstream>

#include "seqadapt/errors.hpp"

namespace seqadapt {

std::string_view to_string(ModelChoice choice) {
    return choice == ModelChoice::kPopulation ? "population" : "patient_specific";
}

SwitchDecision switch_predict(const ModelParameters& population,
                              const ModelParameters& patient, const EventSequence& seq,
                              int t, double gamma) {
    if (!(population.dims == patient.dims)) {
        throw DimensionError("switching candidates have different model dimensions");
    }
    if (t < 2) {
        throw ValidationError("switching needs at least one observed step (t >= 2)");
    }
    SwitchDecision decision;
    decision.step = t;
    decision.population_loss = discounted_loss(population, seq, t, gamma);
    decision.patient_loss = discounted_loss(patient, seq, t, gamma);
    decision.chosen = decision.population_loss >= decision.patient_loss
                          ? ModelChoice::kPatientSpecific
                          : ModelChoice::kPopulation;
    const ModelParameters& winner =
        decision.chosen == ModelChoice::kPatientSpecific ? patient : population;
    decision.prediction =
        predict_next(winner, std::span(seq.inputs).first(static_cast<std::size_t>(t)));
    return decision;
}

std::map<int, SwitchRatioPoint> switch_ratio(const std::vector<SwitchTrace>& traces) {
    std::map<int, SwitchRatioPoint> points;
    for (const SwitchTrace& trace : traces) {
        for (const SwitchDecision& decision : trace.decisions) {
            SwitchRatioPoint& point = points[decision.step];
            ++point.decisions;
            if (decision.chosen == ModelChoice::kPatientSpecific) ++point.patient_specific;
        }
    }
    for (auto& [step, point] : points) {
        point.ratio = static_cast<double>(point.patient_specific) /
                      static_cast<double>(point.decisions);
    }
    return points;
}

std::string format_switch_trace(const SwitchTrace& trace) {
    std::ostringstream out;
    for (const SwitchDecision& decision : trace.decisions) {
        out << trace.patient_id << '\t' << decision.step << '\t'
            << to_string(decision.chosen) << '\t' << decision.population_loss << '\t'
            << decision.patient_loss << '\n';
    }
    return out.str();
}

} // namespace seqadapt
