#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "seqadapt/model.hpp"

namespace seqadapt {

// Which parameter tensors a fine-tuning step may change.
enum class MaskMode {
    kAll,            // every tensor
    kOutputOnly,     // output head only: w_out, b_out
    kTransitionOnly, // recurrence only: gate matrices and gate biases
};

std::optional<MaskMode> parse_mask_mode(std::string_view text);
std::string_view to_string(MaskMode mode);

using ParameterMask = std::array<bool, kTensorCount>;

ParameterMask build_mask(MaskMode mode);

struct AdaptationConfig {
    double gamma = 3.0;          // recency-kernel bandwidth
    double epsilon = 1e-4;       // stop once an epoch improves less than this
    double learning_rate = 0.005;
    MaskMode mask_mode = MaskMode::kAll;
    int max_epochs = 50;

    void validate() const;
};

enum class StopReason { kConverged, kEpochCap };

struct AdaptationTrace {
    double initial_loss = 0.0;      // discounted loss of the base model
    std::vector<double> losses;     // discounted loss after each epoch's update
    StopReason stop = StopReason::kConverged;

    int epochs() const { return static_cast<int>(losses.size()); }
    std::string format() const;     // one line per epoch: epoch, loss, improvement
};

// Recency kernel K(t, i) = exp(-|t - i| / gamma); 1 at zero lag.
double decay_weight(int t, int i, double gamma);

// K(t, i) for the observed prediction steps i = 1..t-1.
std::vector<double> decay_weights(double gamma, int t);

// First t inputs and the t-1 targets observable once window t has closed.
EventSequence prefix_sequence(const EventSequence& seq, int t);

// Recency-weighted history loss at time t: sum over i = 1..t-1 of
// K(t, i) * per-step loss of the prediction made from y_1..y_i.
// Single forward pass with a carried hidden state.
double discounted_loss(const ModelParameters& params, const EventSequence& seq, int t,
                       double gamma);

struct AdaptResult {
    ModelParameters params; // fine-tuned copy
    AdaptationTrace trace;
};

// Fine-tunes a copy of `base` on the patient's observed history through step
// t. Each epoch takes one full-history Adam step on the discounted loss,
// restricted to the configured mask; stops when an epoch improves the loss
// by less than epsilon (an increase also stops) or at the epoch cap. The
// base model is never modified.
AdaptResult adapt(const ModelParameters& base, const EventSequence& seq, int t,
                  const AdaptationConfig& config);

} // namespace seqadapt
