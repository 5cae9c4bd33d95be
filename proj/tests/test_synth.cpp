#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "seqadapt/data.hpp"
#include "seqadapt/errors.hpp"

using namespace seqadapt;

namespace {

SynthConfig small_config() {
    SynthConfig config;
    config.num_patients = 20;
    config.num_events = 6;
    config.num_targets = 4;
    config.num_regimes = 2;
    config.regime_profiles = make_regime_profiles(6, 2, 2, 0.5, 0.8, 0.1);
    config.switch_hazard = 0.1;
    config.min_steps = 4;
    config.max_steps = 9;
    config.seed = 5;
    return config;
}

} // namespace

TEST_CASE("round-robin profiles assign shared and owned rates exactly") {
    const auto profiles = make_regime_profiles(7, 2, 3, 0.25, 0.9, 0.05);
    REQUIRE(profiles.size() == 2);
    REQUIRE(profiles[0].size() == 7);
    // Events 0..2 are shared; 3,5 belong to regime 0; 4,6 to regime 1.
    const std::vector<double> regime0{0.25, 0.25, 0.25, 0.9, 0.05, 0.9, 0.05};
    const std::vector<double> regime1{0.25, 0.25, 0.25, 0.05, 0.9, 0.05, 0.9};
    CHECK(profiles[0] == regime0);
    CHECK(profiles[1] == regime1);

    // Degenerate but legal: everything shared, or a single regime.
    const auto all_shared = make_regime_profiles(3, 2, 3, 0.4, 0.9, 0.1);
    CHECK(all_shared[0] == all_shared[1]);
    const auto single = make_regime_profiles(4, 1, 0, 0.0, 0.7, 0.2);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == std::vector<double>{0.7, 0.7, 0.7, 0.7});

    CHECK_THROWS_AS(make_regime_profiles(3, 0, 0, 0.1, 0.9, 0.1), ValidationError);
    CHECK_THROWS_AS(make_regime_profiles(3, 2, 4, 0.1, 0.9, 0.1), ValidationError);
    CHECK_THROWS_AS(make_regime_profiles(0, 2, 0, 0.1, 0.9, 0.1), ValidationError);
}

TEST_CASE("synthetic cohorts are reproducible and well-shaped") {
    const SynthConfig config = small_config();
    const SynthCohort cohort = synthesize_cohort(config);

    REQUIRE(cohort.sequences.size() == 20);
    REQUIRE(cohort.regime_paths.size() == 20);
    CHECK(cohort.vocabulary.input_size() == 6);
    CHECK(cohort.vocabulary.target_size() == 4);
    CHECK(cohort.vocabulary.input_names[0] == "ev_000");
    CHECK(cohort.vocabulary.target_names[3] == "ev_003");

    for (std::size_t p = 0; p < cohort.sequences.size(); ++p) {
        const EventSequence& seq = cohort.sequences[p];
        CHECK(seq.steps() >= 4);
        CHECK(seq.steps() <= 9);
        CHECK(seq.targets.size() == seq.inputs.size() - 1);
        CHECK(cohort.regime_paths[p].size() == seq.inputs.size());
        for (int regime : cohort.regime_paths[p]) {
            CHECK(regime >= 0);
            CHECK(regime < 2);
        }
        seq.validate(6, 4);
    }

    const SynthCohort again = synthesize_cohort(config);
    REQUIRE(again.sequences.size() == cohort.sequences.size());
    for (std::size_t p = 0; p < cohort.sequences.size(); ++p) {
        CHECK(again.sequences[p].inputs == cohort.sequences[p].inputs);
        CHECK(again.sequences[p].targets == cohort.sequences[p].targets);
        CHECK(again.regime_paths[p] == cohort.regime_paths[p]);
    }

    SynthConfig reseeded = config;
    reseeded.seed = 6;
    const SynthCohort different = synthesize_cohort(reseeded);
    bool any_difference = false;
    for (std::size_t p = 0; p < cohort.sequences.size() && !any_difference; ++p) {
        any_difference = different.sequences[p].inputs != cohort.sequences[p].inputs ||
                         different.sequences[p].steps() != cohort.sequences[p].steps();
    }
    CHECK(any_difference);
}

TEST_CASE("each target step is the next input truncated to the target space") {
    const SynthCohort cohort = synthesize_cohort(small_config());
    for (const EventSequence& seq : cohort.sequences) {
        for (std::size_t i = 0; i < seq.targets.size(); ++i) {
            std::vector<std::int32_t> expected;
            for (std::int32_t e : seq.inputs[i + 1].active()) {
                if (e < 4) expected.push_back(e);
            }
            CHECK(seq.targets[i].active() == expected);
        }
    }
}

TEST_CASE("event frequencies track the regime profiles") {
    // With the regime path exposed, every (step, event) pair is an
    // independent Bernoulli draw at a known rate; check the pooled frequency
    // of one owned event within its home regime against a 4-sigma band.
    SynthConfig config = small_config();
    config.num_patients = 400;
    config.min_steps = 10;
    config.max_steps = 10;
    const SynthCohort cohort = synthesize_cohort(config);

    // Event 2 is owned by regime 0 (first non-shared event) at rate 0.8.
    std::int64_t draws = 0;
    std::int64_t hits = 0;
    for (std::size_t p = 0; p < cohort.sequences.size(); ++p) {
        const EventSequence& seq = cohort.sequences[p];
        for (std::size_t s = 0; s < cohort.regime_paths[p].size(); ++s) {
            if (cohort.regime_paths[p][s] != 0) continue;
            ++draws;
            if (seq.inputs[s].test(2)) ++hits;
        }
    }
    REQUIRE(draws > 500); // both regimes are visited plenty
    const double rate = static_cast<double>(hits) / static_cast<double>(draws);
    const double sigma = std::sqrt(0.8 * 0.2 / static_cast<double>(draws));
    CHECK(std::fabs(rate - 0.8) < 4.0 * sigma);
}

TEST_CASE("a zero hazard freezes each patient in its starting regime") {
    SynthConfig config = small_config();
    config.switch_hazard = 0.0;
    const SynthCohort cohort = synthesize_cohort(config);
    bool saw_both_regimes = false;
    for (const auto& path : cohort.regime_paths) {
        for (int regime : path) CHECK(regime == path.front());
        if (path.front() != cohort.regime_paths.front().front()) saw_both_regimes = true;
    }
    CHECK(saw_both_regimes); // starting regimes still vary across patients

    // Hazard 1 with two regimes alternates deterministically.
    config.switch_hazard = 1.0;
    const SynthCohort flipping = synthesize_cohort(config);
    for (const auto& path : flipping.regime_paths) {
        for (std::size_t s = 1; s < path.size(); ++s) CHECK(path[s] == 1 - path[s - 1]);
    }
}

TEST_CASE("synthesis validates its configuration") {
    auto broken = [](auto mutate) {
        SynthConfig config;
        config.num_events = 4;
        config.num_targets = 2;
        config.num_regimes = 1;
        config.regime_profiles = {{0.5, 0.5, 0.5, 0.5}};
        mutate(config);
        return config;
    };
    CHECK_NOTHROW(validate_synth_config(broken([](SynthConfig&) {})));
    CHECK_THROWS_AS(validate_synth_config(broken([](SynthConfig& c) { c.num_patients = 0; })),
                    ValidationError);
    CHECK_THROWS_AS(validate_synth_config(broken([](SynthConfig& c) { c.num_targets = 5; })),
                    ValidationError);
    CHECK_THROWS_AS(validate_synth_config(broken([](SynthConfig& c) { c.num_regimes = 2; })),
                    ValidationError); // profile count mismatch
    CHECK_THROWS_AS(
        validate_synth_config(broken([](SynthConfig& c) { c.regime_profiles[0].pop_back(); })),
        ValidationError);
    CHECK_THROWS_AS(
        validate_synth_config(broken([](SynthConfig& c) { c.regime_profiles[0][0] = 1.5; })),
        ValidationError);
    CHECK_THROWS_AS(validate_synth_config(broken([](SynthConfig& c) { c.switch_hazard = -0.1; })),
                    ValidationError);
    CHECK_THROWS_AS(validate_synth_config(broken([](SynthConfig& c) { c.min_steps = 1; })),
                    ValidationError);
    CHECK_THROWS_AS(
        validate_synth_config(broken([](SynthConfig& c) { c.max_steps = c.min_steps - 1; })),
        ValidationError);
}
