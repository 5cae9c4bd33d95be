#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqadapt/events.hpp"
#include "seqadapt/rng.hpp"
#include "seqadapt/tensor.hpp"

namespace seqadapt {

// Recurrent multi-label event model:
//   v_t = W_emb * y_t
//   z_t = sigmoid(W_z v_t + U_z h_{t-1} + b_z)        (update gate)
//   r_t = sigmoid(W_r v_t + U_r h_{t-1} + b_r)        (reset gate)
//   c_t = tanh(W_c v_t + U_c (r_t . h_{t-1}) + b_c)   (candidate)
//   h_t = (1 - z_t) . h_{t-1} + z_t . c_t
//   p_{t+1} = sigmoid(W_out h_t + b_out)
// The update gate scales the candidate, so z ~ 0 copies the previous state.

struct ModelDims {
    int embed_dim = 0;
    int hidden_dim = 0;
    std::size_t input_size = 0;
    std::size_t target_size = 0;

    void validate() const;
    bool operator==(const ModelDims&) const = default;
};

// Stable ordering of the twelve parameter tensors; masks and the optimizer
// state are indexed by this.
enum TensorId : int {
    kWEmb = 0,
    kWz, kUz, kBz,
    kWr, kUr, kBr,
    kWc, kUc, kBc,
    kWOut, kBOut,
};
inline constexpr int kTensorCount = 12;
inline constexpr std::array<const char*, kTensorCount> kTensorNames = {
    "w_emb", "w_z", "u_z", "b_z", "w_r", "u_r", "b_r",
    "w_c", "u_c", "b_c", "w_out", "b_out",
};

struct ModelParameters {
    ModelDims dims;
    Tensor2 w_emb;              // embed_dim x input_size
    Tensor2 w_z, w_r, w_c;      // hidden_dim x embed_dim
    Tensor2 u_z, u_r, u_c;      // hidden_dim x hidden_dim
    Tensor1 b_z, b_r, b_c;      // hidden_dim
    Tensor2 w_out;              // target_size x hidden_dim
    Tensor1 b_out;              // target_size

    static ModelParameters zeros(const ModelDims& dims);
    // Matrices uniform in +-1/sqrt(fan_in), biases zero.
    static ModelParameters init(const ModelDims& dims, Rng& rng);

    std::array<std::span<double>, kTensorCount> tensor_views();
    std::array<std::span<const double>, kTensorCount> tensor_views() const;
    std::vector<std::size_t> tensor_sizes() const;

    bool operator==(const ModelParameters&) const = default;
};

// Intermediate values of one recurrent step, kept for backpropagation.
struct StepCache {
    Tensor1 v, z, r, c, h;
};

struct ForwardCache {
    std::vector<StepCache> steps;
};

Tensor1 embed(const ModelParameters& params, const BinaryVec& y);

// Computes one recurrent step from h_prev and an embedded input.
StepCache gru_step(const ModelParameters& params, const Tensor1& h_prev, const Tensor1& v);

// h_next after consuming one event vector.
Tensor1 advance_state(const ModelParameters& params, const Tensor1& h_prev, const BinaryVec& y);

Tensor1 initial_state(const ModelParameters& params);

// Event probabilities from a hidden state: sigmoid(W_out h + b_out).
Tensor1 predict_from_state(const ModelParameters& params, const Tensor1& h);

struct StepPrediction {
    Tensor1 h;     // updated hidden state
    Tensor1 probs; // probabilities for the next step's events
};

// One incremental step: consume y_t and predict step t+1.
StepPrediction predict_step(const ModelParameters& params, const Tensor1& h_prev,
                            const BinaryVec& y);

// Convenience: consume the whole history, then predict the next step.
Tensor1 predict_next(const ModelParameters& params, std::span<const BinaryVec> history);

// Runs the recurrence over the given inputs, caching per-step activations.
ForwardCache run_forward(const ModelParameters& params, std::span<const BinaryVec> inputs);

// Sum over event coordinates of binary cross-entropy against a 0/1 target,
// with probabilities clamped to [1e-12, 1 - 1e-12] before the logs.
double bce_event_loss(const BinaryVec& target, const Tensor1& probs);

// Unweighted sequence loss: sum of per-step losses for predictions at
// t = 1..T-1 (each made from history y_1..y_t against target y_{t+1}).
double sequence_loss(const ModelParameters& params, const EventSequence& seq);

// Same, summed over a whole dataset; empty datasets yield zero.
double sequence_loss(const ModelParameters& params, const Dataset& dataset);

struct BackwardResult {
    ModelParameters grads;
    double weighted_loss = 0.0;        // sum of step_weights[t] * step loss
    std::vector<double> step_losses;   // unweighted per-step losses
};

// Backpropagation through time for the weighted sequence loss
// sum_t step_weights[t] * loss_t, where t indexes the T-1 predicted steps.
BackwardResult backward(const ModelParameters& params, const EventSequence& seq,
                        std::span<const double> step_weights);

// Binary checkpoint with dimensions, a vocabulary fingerprint, and a payload
// checksum; load rejects corrupt or mismatched files.
void save_model(const std::string& path, const ModelParameters& params,
                std::uint64_t vocab_hash);

struct LoadedModel {
    ModelParameters params;
    std::uint64_t vocab_hash = 0;
};

LoadedModel load_model(const std::string& path);

} // namespace seqadapt
