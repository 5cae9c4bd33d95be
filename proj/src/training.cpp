#include "seqadapt/training.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <utility>

#include "seqadapt/errors.hpp"
#include "seqadapt/optim.hpp"
#include "seqadapt/rng.hpp"

namespace seqadapt {

namespace {

std::size_t predicted_steps(const Dataset& dataset) {
    std::size_t total = 0;
    for (const EventSequence& seq : dataset) {
        total += static_cast<std::size_t>(seq.steps() - 1);
    }
    return total;
}

void add_scaled(ModelParameters& acc, const ModelParameters& grads, double scale) {
    auto acc_views = acc.tensor_views();
    auto grad_views = grads.tensor_views();
    for (int n = 0; n < kTensorCount; ++n) {
        for (std::size_t i = 0; i < acc_views[n].size(); ++i) {
            acc_views[n][i] += scale * grad_views[n][i];
        }
    }
}

struct EpochOutcome {
    double validation_loss = 0.0;
};

// One pass over the training set: shuffled mini-batches, one Adam step per
// batch with the batch gradient divided by its number of predicted steps.
EpochOutcome run_epoch(ModelParameters& params, const Dataset& train, const Dataset& valid,
                       const TrainingConfig& config, double lambda, AdamState& state,
                       Rng& shuffle_rng, int epoch) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);

    AdamConfig adam;
    adam.learning_rate = config.learning_rate;
    adam.weight_decay = lambda;
    std::array<bool, kTensorCount> all;
    all.fill(true);

    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t end =
            std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
        ModelParameters batch_grads = ModelParameters::zeros(params.dims);
        std::size_t batch_steps = 0;
        double batch_loss = 0.0;
        for (std::size_t index = begin; index < end; ++index) {
            const EventSequence& seq = train[order[index]];
            const std::vector<double> weights(static_cast<std::size_t>(seq.steps() - 1), 1.0);
            BackwardResult bw;
            try {
                bw = backward(params, seq, weights);
            } catch (const NumericError& error) {
                throw NumericError("training epoch " + std::to_string(epoch) + ": " +
                                   error.what());
            }
            add_scaled(batch_grads, bw.grads, 1.0);
            batch_steps += weights.size();
            batch_loss += bw.weighted_loss;
        }
        if (!std::isfinite(batch_loss)) {
            throw NumericError("training loss is not finite at epoch " + std::to_string(epoch));
        }
        const double scale = 1.0 / static_cast<double>(batch_steps);
        for (auto view : batch_grads.tensor_views()) {
            for (double& g : view) g *= scale;
        }
        auto param_views = params.tensor_views();
        const auto grad_views = std::as_const(batch_grads).tensor_views();
        adam_step(param_views, grad_views, all, adam, state);
    }

    EpochOutcome outcome;
    outcome.validation_loss = normalized_loss(params, valid);
    if (!std::isfinite(outcome.validation_loss)) {
        throw NumericError("validation loss is not finite at epoch " + std::to_string(epoch));
    }
    return outcome;
}

struct TrialResult {
    ModelParameters params;
    LambdaTrial stats;
};

std::string progress_line(double lambda, int epoch, double validation_loss) {
    char buffer[96];
    std::snprintf(buffer, sizeof(buffer), "lambda %.0e epoch %d validation %.6f", lambda,
                  epoch, validation_loss);
    return buffer;
}

TrialResult run_trial(const Dataset& train, const Dataset& valid, const TrainingConfig& config,
                      double lambda, std::uint64_t seed, const ModelDims& dims,
                      const TrainingProgress& progress) {
    Rng init_rng(seed);
    Rng shuffle_rng(seed, 1);
    ModelParameters params = ModelParameters::init(dims, init_rng);

    TrialResult result;
    result.stats.lambda = lambda;
    result.params = params;
    result.stats.best_validation_loss = normalized_loss(params, valid);
    result.stats.best_epoch = 0;
    result.stats.validation_losses.push_back(result.stats.best_validation_loss);
    if (progress) progress(progress_line(lambda, 0, result.stats.best_validation_loss));

    AdamState state(params.tensor_sizes());
    int stale_epochs = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const EpochOutcome outcome =
            run_epoch(params, train, valid, config, lambda, state, shuffle_rng, epoch);
        result.stats.epochs_run = epoch;
        result.stats.validation_losses.push_back(outcome.validation_loss);
        if (progress) progress(progress_line(lambda, epoch, outcome.validation_loss));
        if (outcome.validation_loss < result.stats.best_validation_loss) {
            result.stats.best_validation_loss = outcome.validation_loss;
            result.stats.best_epoch = epoch;
            result.params = params;
            stale_epochs = 0;
        } else if (++stale_epochs >= config.patience) {
            break;
        }
    }
    return result;
}

} // namespace

void TrainingConfig::validate() const {
    if (embed_dim <= 0 || hidden_dim <= 0) {
        throw ValidationError("training dimensions must be positive");
    }
    if (learning_rate <= 0.0) throw ValidationError("learning rate must be positive");
    if (batch_size < 1) throw ValidationError("batch size must be at least 1");
    if (max_epochs < 1) throw ValidationError("epoch cap must be at least 1");
    if (patience < 1) throw ValidationError("patience must be at least 1");
    if (lambda_grid.empty()) throw ValidationError("L2 grid must not be empty");
    for (double lambda : lambda_grid) {
        if (lambda < 0.0) throw ValidationError("L2 weights must be non-negative");
    }
}

double normalized_loss(const ModelParameters& params, const Dataset& dataset) {
    const std::size_t steps = predicted_steps(dataset);
    if (steps == 0) return 0.0;
    return sequence_loss(params, dataset) / static_cast<double>(steps);
}

TrainingResult train_population(const Dataset& train, const Dataset& valid,
                                const TrainingConfig& config, std::uint64_t seed,
                                const TrainingProgress& progress) {
    config.validate();
    if (train.empty()) throw ValidationError("training set must not be empty");
    if (valid.empty()) throw ValidationError("validation set must not be empty");

    ModelDims dims;
    dims.embed_dim = config.embed_dim;
    dims.hidden_dim = config.hidden_dim;
    dims.input_size = train.front().inputs.front().size();
    dims.target_size = train.front().targets.front().size();
    for (const EventSequence& seq : train) seq.validate(dims.input_size, dims.target_size);
    for (const EventSequence& seq : valid) seq.validate(dims.input_size, dims.target_size);

    TrainingResult result;
    bool have_best = false;
    for (double lambda : config.lambda_grid) {
        TrialResult trial = run_trial(train, valid, config, lambda, seed, dims, progress);
        result.report.trials.push_back(trial.stats);
        if (!have_best ||
            trial.stats.best_validation_loss < result.report.best_validation_loss) {
            have_best = true;
            result.report.chosen_lambda = lambda;
            result.report.best_validation_loss = trial.stats.best_validation_loss;
            result.report.best_epoch = trial.stats.best_epoch;
            result.params = std::move(trial.params);
        }
    }
    return result;
}

} // namespace seqadapt
