#include "seqadapt/adaptation.hpp"

#include <cmath>
#include <sstream>

#include "seqadapt/errors.hpp"
#include "seqadapt/optim.hpp"

namespace seqadapt {

std::optional<MaskMode> parse_mask_mode(std::string_view text) {
    if (text == "all") return MaskMode::kAll;
    if (text == "output_only") return MaskMode::kOutputOnly;
    if (text == "transition_only") return MaskMode::kTransitionOnly;
    return std::nullopt;
}

std::string_view to_string(MaskMode mode) {
    switch (mode) {
    case MaskMode::kAll: return "all";
    case MaskMode::kOutputOnly: return "output_only";
    case MaskMode::kTransitionOnly: return "transition_only";
    }
    return "unknown";
}

ParameterMask build_mask(MaskMode mode) {
    ParameterMask mask{};
    switch (mode) {
    case MaskMode::kAll:
        mask.fill(true);
        return mask;
    case MaskMode::kOutputOnly:
        mask[kWOut] = true;
        mask[kBOut] = true;
        return mask;
    case MaskMode::kTransitionOnly:
        mask[kWz] = mask[kUz] = mask[kBz] = true;
        mask[kWr] = mask[kUr] = mask[kBr] = true;
        mask[kWc] = mask[kUc] = mask[kBc] = true;
        return mask;
    }
    throw ValidationError("unknown parameter mask mode");
}

void AdaptationConfig::validate() const {
    if (gamma <= 0.0) throw ValidationError("adaptation gamma must be positive");
    if (epsilon <= 0.0) throw ValidationError("adaptation epsilon must be positive");
    if (learning_rate <= 0.0) throw ValidationError("adaptation learning rate must be positive");
    if (max_epochs < 1) throw ValidationError("adaptation epoch cap must be at least 1");
}

std::string AdaptationTrace::format() const {
    std::ostringstream out;
    out << "initial " << initial_loss << "\n";
    double prev = initial_loss;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        out << "epoch " << (i + 1) << " loss " << losses[i] << " improvement "
            << (prev - losses[i]) << "\n";
        prev = losses[i];
    }
    out << (stop == StopReason::kConverged ? "converged" : "epoch cap reached") << "\n";
    return out.str();
}

double decay_weight(int t, int i, double gamma) {
    if (gamma <= 0.0) throw ValidationError("decay bandwidth gamma must be positive");
    if (t < 1 || i < 1) throw ValidationError("decay weight step indices must be >= 1");
    return std::exp(-std::abs(t - i) / gamma);
}

std::vector<double> decay_weights(double gamma, int t) {
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(std::max(0, t - 1)));
    for (int i = 1; i <= t - 1; ++i) weights.push_back(decay_weight(t, i, gamma));
    return weights;
}

EventSequence prefix_sequence(const EventSequence& seq, int t) {
    if (t < 2 || t > seq.steps()) {
        throw ValidationError("history prefix must cover 2.." + std::to_string(seq.steps()) +
                              " steps, got " + std::to_string(t));
    }
    EventSequence prefix;
    prefix.patient_id = seq.patient_id;
    prefix.window_hours = seq.window_hours;
    prefix.inputs.assign(seq.inputs.begin(), seq.inputs.begin() + t);
    prefix.targets.assign(seq.targets.begin(), seq.targets.begin() + (t - 1));
    return prefix;
}

double discounted_loss(const ModelParameters& params, const EventSequence& seq, int t,
                       double gamma) {
    if (gamma <= 0.0) throw ValidationError("decay bandwidth gamma must be positive");
    if (t < 2) {
        throw ValidationError("discounted loss needs at least one observed step (t >= 2)");
    }
    if (t > seq.steps()) {
        throw ValidationError("history prefix " + std::to_string(t) +
                              " exceeds sequence length " + std::to_string(seq.steps()));
    }
    seq.validate(params.dims.input_size, params.dims.target_size);
    Tensor1 h = initial_state(params);
    double total = 0.0;
    for (int i = 1; i <= t - 1; ++i) {
        h = advance_state(params, h, seq.inputs[static_cast<std::size_t>(i) - 1]);
        const Tensor1 probs = predict_from_state(params, h);
        total += decay_weight(t, i, gamma) * bce_event_loss(seq.target_at(i), probs);
    }
    return total;
}

AdaptResult adapt(const ModelParameters& base, const EventSequence& seq, int t,
                  const AdaptationConfig& config) {
    config.validate();
    if (t < 2) {
        throw ValidationError("adaptation needs at least one observed step (t >= 2)");
    }
    const EventSequence history = prefix_sequence(seq, t);
    history.validate(base.dims.input_size, base.dims.target_size);
    const std::vector<double> weights = decay_weights(config.gamma, t);
    const ParameterMask mask = build_mask(config.mask_mode);

    AdamConfig adam;
    adam.learning_rate = config.learning_rate;

    AdaptResult result;
    result.params = base;
    result.trace.initial_loss = discounted_loss(base, seq, t, config.gamma);
    result.trace.stop = StopReason::kEpochCap;
    AdamState state(result.params.tensor_sizes());

    double previous = result.trace.initial_loss;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double loss;
        try {
            const BackwardResult bw = backward(result.params, history, weights);
            auto param_views = result.params.tensor_views();
            const auto grad_views = bw.grads.tensor_views();
            adam_step(param_views, grad_views, mask, adam, state);
            loss = discounted_loss(result.params, seq, t, config.gamma);
        } catch (const NumericError& error) {
            throw NumericError("adaptation epoch " + std::to_string(epoch) + ": " +
                               error.what());
        }
        if (!std::isfinite(loss)) {
            throw NumericError("adaptation loss is not finite at epoch " +
                               std::to_string(epoch));
        }
        result.trace.losses.push_back(loss);
        if (previous - loss < config.epsilon) {
            result.trace.stop = StopReason::kConverged;
            break;
        }
        previous = loss;
    }
    return result;
}

} // namespace seqadapt
