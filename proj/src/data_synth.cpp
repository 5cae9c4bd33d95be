#include <algorithm>
#include <cstdio>

#include "seqadapt/data.hpp"
#include "seqadapt/errors.hpp"
#include "seqadapt/rng.hpp"

namespace seqadapt {

namespace {

std::string padded_name(const char* prefix, int index, int width) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%s%0*d", prefix, width, index);
    return buffer;
}

} // namespace

void validate_synth_config(const SynthConfig& config) {
    if (config.num_patients < 1) throw ValidationError("cohort needs at least 1 patient");
    if (config.num_events < 1 || config.num_events > 999) {
        throw ValidationError("event count must be in 1..999");
    }
    if (config.num_targets < 1 || config.num_targets > config.num_events) {
        throw ValidationError("target count must be in 1..event count");
    }
    if (config.num_regimes < 1) throw ValidationError("cohort needs at least 1 regime");
    if (config.regime_profiles.size() != static_cast<std::size_t>(config.num_regimes)) {
        throw ValidationError("expected " + std::to_string(config.num_regimes) +
                              " regime profiles, got " +
                              std::to_string(config.regime_profiles.size()));
    }
    for (const auto& profile : config.regime_profiles) {
        if (profile.size() != static_cast<std::size_t>(config.num_events)) {
            throw ValidationError("regime profile length does not match event count");
        }
        for (double p : profile) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ValidationError("event probabilities must lie in [0, 1]");
            }
        }
    }
    if (!(config.switch_hazard >= 0.0 && config.switch_hazard <= 1.0)) {
        throw ValidationError("regime-switch hazard must lie in [0, 1]");
    }
    if (config.min_steps < 2 || config.max_steps < config.min_steps) {
        throw ValidationError("sequence lengths need 2 <= min_steps <= max_steps");
    }
}

std::vector<std::vector<double>> make_regime_profiles(int num_events, int num_regimes,
                                                      int num_shared, double shared_rate,
                                                      double home_rate, double away_rate) {
    if (num_regimes < 1 || num_events < 1 || num_shared < 0 || num_shared > num_events) {
        throw ValidationError("bad regime profile shape");
    }
    std::vector<std::vector<double>> profiles(
        static_cast<std::size_t>(num_regimes),
        std::vector<double>(static_cast<std::size_t>(num_events)));
    for (int e = 0; e < num_events; ++e) {
        if (e < num_shared) {
            for (auto& profile : profiles) profile[static_cast<std::size_t>(e)] = shared_rate;
        } else {
            const int owner = (e - num_shared) % num_regimes;
            for (int r = 0; r < num_regimes; ++r) {
                profiles[static_cast<std::size_t>(r)][static_cast<std::size_t>(e)] =
                    r == owner ? home_rate : away_rate;
            }
        }
    }
    return profiles;
}

SynthCohort synthesize_cohort(const SynthConfig& config) {
    validate_synth_config(config);

    SynthCohort cohort;
    for (int e = 0; e < config.num_events; ++e) {
        const std::string name = padded_name("ev_", e, 3);
        cohort.vocabulary.input_names.push_back(name);
        if (e < config.num_targets) cohort.vocabulary.target_names.push_back(name);
    }
    cohort.vocabulary.rebuild_index();

    cohort.sequences.reserve(static_cast<std::size_t>(config.num_patients));
    cohort.regime_paths.reserve(static_cast<std::size_t>(config.num_patients));
    for (int p = 0; p < config.num_patients; ++p) {
        // One independent stream per patient: the cohort is reproducible and
        // unaffected by generation order.
        Rng rng(config.seed, static_cast<std::uint64_t>(p) + 1);
        const int steps =
            config.min_steps + static_cast<int>(rng.uniform_int(
                                   static_cast<std::uint64_t>(config.max_steps -
                                                              config.min_steps + 1)));
        std::vector<int> path;
        path.reserve(static_cast<std::size_t>(steps));
        int regime = static_cast<int>(rng.uniform_int(
            static_cast<std::uint64_t>(config.num_regimes)));

        EventSequence seq;
        seq.patient_id = padded_name("synth_", p, 4);
        for (int s = 0; s < steps; ++s) {
            if (s > 0 && config.num_regimes > 1 && rng.bernoulli(config.switch_hazard)) {
                // Jump uniformly to one of the other regimes.
                const auto hop = 1 + rng.uniform_int(
                                         static_cast<std::uint64_t>(config.num_regimes - 1));
                regime = (regime + static_cast<int>(hop)) % config.num_regimes;
            }
            path.push_back(regime);
            const std::vector<double>& profile =
                config.regime_profiles[static_cast<std::size_t>(regime)];
            std::vector<std::int32_t> active;
            for (int e = 0; e < config.num_events; ++e) {
                if (rng.bernoulli(profile[static_cast<std::size_t>(e)])) {
                    active.push_back(e);
                }
            }
            seq.inputs.emplace_back(static_cast<std::size_t>(config.num_events), active);
            if (s >= 1) {
                std::vector<std::int32_t> target_active;
                for (std::int32_t e : active) {
                    if (e < config.num_targets) target_active.push_back(e);
                }
                seq.targets.emplace_back(static_cast<std::size_t>(config.num_targets),
                                         target_active);
            }
        }
        seq.validate(cohort.vocabulary.input_size(), cohort.vocabulary.target_size());
        cohort.sequences.push_back(std::move(seq));
        cohort.regime_paths.push_back(std::move(path));
    }
    return cohort;
}

} // namespace seqadapt
