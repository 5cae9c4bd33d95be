#pragma once

// Shared fixture helpers for the test suites.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "seqadapt/events.hpp"
#include "seqadapt/model.hpp"
#include "seqadapt/rng.hpp"

namespace testsupport {

// A sequence from explicit per-step active-index lists; each step's target
// is the next step's vector truncated to the first `target_size` indices.
inline seqadapt::EventSequence make_sequence(
    std::string patient_id, std::size_t input_size, std::size_t target_size,
    const std::vector<std::vector<std::int32_t>>& steps) {
    seqadapt::EventSequence seq;
    seq.patient_id = std::move(patient_id);
    for (const auto& active : steps) {
        seq.inputs.emplace_back(input_size, active);
    }
    for (std::size_t i = 1; i < steps.size(); ++i) {
        std::vector<std::int32_t> kept;
        for (std::int32_t k : steps[i]) {
            if (k < static_cast<std::int32_t>(target_size)) kept.push_back(k);
        }
        seq.targets.emplace_back(target_size, kept);
    }
    return seq;
}

inline seqadapt::ModelParameters random_params(const seqadapt::ModelDims& dims,
                                               std::uint64_t seed) {
    seqadapt::Rng rng(seed);
    return seqadapt::ModelParameters::init(dims, rng);
}

// Random binary sequence with roughly `density` active events per step.
inline seqadapt::EventSequence random_sequence(const std::string& patient_id,
                                               std::size_t input_size,
                                               std::size_t target_size, int steps,
                                               double density, std::uint64_t seed) {
    seqadapt::Rng rng(seed);
    std::vector<std::vector<std::int32_t>> active(static_cast<std::size_t>(steps));
    for (auto& step : active) {
        for (std::size_t k = 0; k < input_size; ++k) {
            if (rng.bernoulli(density)) step.push_back(static_cast<std::int32_t>(k));
        }
    }
    return make_sequence(patient_id, input_size, target_size, active);
}

// Self-deleting temporary directory.
class TempDir {
public:
    TempDir() {
        std::string buffer =
            (std::filesystem::temp_directory_path() / "seqadapt_test_XXXXXX").string();
        if (mkdtemp(buffer.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = buffer;
    }

    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    const std::string& path() const { return path_; }

    std::string file(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write fixture " + path);
}

inline std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace testsupport
