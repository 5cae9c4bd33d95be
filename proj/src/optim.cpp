#include "seqadapt/optim.hpp"

#include <cmath>
#include <string>

#include "seqadapt/errors.hpp"

namespace seqadapt {

AdamState::AdamState(const std::vector<std::size_t>& tensor_sizes) {
    moment1.reserve(tensor_sizes.size());
    moment2.reserve(tensor_sizes.size());
    for (std::size_t n : tensor_sizes) {
        moment1.emplace_back(n, 0.0);
        moment2.emplace_back(n, 0.0);
    }
}

void adam_step(std::span<std::span<double>> params,
               std::span<const std::span<const double>> grads,
               std::span<const bool> tensor_mask,
               const AdamConfig& config,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != tensor_mask.size()) {
        throw DimensionError("adam_step: got " + std::to_string(params.size()) +
                             " parameter tensors, " + std::to_string(grads.size()) +
                             " gradient tensors, " + std::to_string(tensor_mask.size()) +
                             " mask entries");
    }
    if (state.moment1.empty()) {
        std::vector<std::size_t> sizes;
        sizes.reserve(params.size());
        for (const auto& p : params) sizes.push_back(p.size());
        state = AdamState(sizes);
    }
    if (state.moment1.size() != params.size()) {
        throw DimensionError("adam_step: optimizer state tracks " +
                             std::to_string(state.moment1.size()) + " tensors, update has " +
                             std::to_string(params.size()));
    }
    if (config.learning_rate <= 0.0) {
        throw ValidationError("adam_step: learning rate must be positive");
    }

    state.step += 1;
    const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!tensor_mask[i]) continue;
        std::span<double> p = params[i];
        std::span<const double> g = grads[i];
        if (p.size() != g.size() || p.size() != state.moment1[i].size()) {
            throw DimensionError("adam_step: tensor " + std::to_string(i) + " has " +
                                 std::to_string(p.size()) + " parameters but " +
                                 std::to_string(g.size()) + " gradient entries");
        }
        double* m = state.moment1[i].data();
        double* v = state.moment2[i].data();
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double grad = g[k] + config.weight_decay * p[k];
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad;
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad * grad;
            const double m_hat = m[k] / bias1;
            const double v_hat = v[k] / bias2;
            p[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

std::vector<std::vector<double>> finite_diff_gradient(
    std::span<const std::span<double>> params,
    const std::function<double()>& loss,
    double step_size) {
    if (step_size <= 0.0) {
        throw ValidationError("finite_diff_gradient: step size must be positive");
    }
    std::vector<std::vector<double>> grads;
    grads.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::span<double> p = params[i];
        std::vector<double> g(p.size(), 0.0);
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double saved = p[k];
            p[k] = saved + step_size;
            const double up = loss();
            p[k] = saved - step_size;
            const double down = loss();
            p[k] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw NumericError("finite_diff_gradient: non-finite loss probing tensor " +
                                   std::to_string(i) + " coordinate " + std::to_string(k));
            }
            g[k] = (up - down) / (2.0 * step_size);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

} // namespace seqadapt
