#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

namespace seqadapt {

// Streaming FNV-1a (64 bit). Used for content hashes of vocabularies,
// archives and checkpoints; stable across platforms and runs.
class Fnv1a64 {
public:
    void update(const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state_ ^= bytes[i];
            state_ *= 0x100000001b3ull;
        }
    }

    void update(std::string_view s) { update(s.data(), s.size()); }

    void update_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            state_ ^= static_cast<unsigned char>(v >> (8 * i));
            state_ *= 0x100000001b3ull;
        }
    }

    void update_i64(std::int64_t v) { update_u64(static_cast<std::uint64_t>(v)); }

    void update_double(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        update_u64(bits);
    }

    void update_doubles(std::span<const double> values) {
        for (double v : values) update_double(v);
    }

    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::string to_hex(std::uint64_t value);

std::uint64_t hash_file(const std::string& path);

} // namespace seqadapt
