#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "seqadapt/model.hpp"

namespace seqadapt {

struct TrainingConfig {
    int embed_dim = 16;
    int hidden_dim = 64;
    double learning_rate = 0.005;
    int batch_size = 32;
    int max_epochs = 100;
    int patience = 5; // epochs without validation improvement before stopping
    std::vector<double> lambda_grid = {1e-4, 1e-5, 1e-6, 1e-7};

    void validate() const;
};

struct LambdaTrial {
    double lambda = 0.0;
    double best_validation_loss = 0.0; // per predicted step
    int best_epoch = 0;                // 1-based epoch of the best snapshot
    int epochs_run = 0;
    // Validation-loss curve: index 0 is the pre-training loss, then one
    // entry per epoch run.
    std::vector<double> validation_losses;
};

struct TrainingReport {
    double chosen_lambda = 0.0;
    double best_validation_loss = 0.0;
    int best_epoch = 0;
    std::vector<LambdaTrial> trials;
};

struct TrainingResult {
    ModelParameters params;
    TrainingReport report;
};

// Receives one human-readable line per epoch; useful for live logs that
// survive a run aborted by a numeric error.
using TrainingProgress = std::function<void(const std::string&)>;

// Trains the population model: one full run per L2 weight in the grid, each
// from the same seeded initialization, with mini-batched Adam (gradients
// averaged per predicted step) and early stopping on validation loss. Keeps
// the best-epoch snapshot and returns the grid entry with the lowest
// validation loss (ties go to the earlier grid entry).
TrainingResult train_population(const Dataset& train, const Dataset& valid,
                                const TrainingConfig& config, std::uint64_t seed,
                                const TrainingProgress& progress = {});

// Mean per-predicted-step loss over a dataset; used for validation tracking.
double normalized_loss(const ModelParameters& params, const Dataset& dataset);

} // namespace seqadapt
