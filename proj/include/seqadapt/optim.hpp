#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace seqadapt {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // L2 penalty added to the gradient as weight_decay * theta before the
    // moment updates.
    double weight_decay = 0.0;
};

// First/second moment accumulators, one pair per parameter tensor.
struct AdamState {
    AdamState() = default;
    explicit AdamState(const std::vector<std::size_t>& tensor_sizes);

    std::vector<std::vector<double>> moment1;
    std::vector<std::vector<double>> moment2;
    std::int64_t step = 0;
};

// One bias-corrected Adam update over a set of parameter tensors.
// Tensors whose mask entry is false are left untouched, accumulators
// included. The step counter advances once per call.
void adam_step(std::span<std::span<double>> params,
               std::span<const std::span<const double>> grads,
               std::span<const bool> tensor_mask,
               const AdamConfig& config,
               AdamState& state);

// Central-difference gradient of `loss` with respect to every coordinate of
// `params`. The callable must read the same storage the spans view; each
// coordinate is perturbed in place and restored. Throws NumericError naming
// the tensor/coordinate if a probe evaluates to a non-finite loss.
std::vector<std::vector<double>> finite_diff_gradient(
    std::span<const std::span<double>> params,
    const std::function<double()>& loss,
    double step_size);

} // namespace seqadapt
