#pragma once

#include <cstdint>
#include <random>

#include "rh/numerics.hpp"

namespace rh {

// splitmix64 finalizer: a bijective avalanche mix on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// A deterministic random substream keyed by (seed, index, salt).
//
// Every simulated path owns the substream keyed by its global path index, so
// results depend only on (seed, n_paths, step count) and are bit-identical
// however the index range is partitioned across workers. `salt` keys
// independent re-draws (e.g. rejection resampling attempts).
//
// The generator is splitmix64: constant-time construction matters because a
// fresh substream is keyed per path, and short paths would otherwise pay more
// for engine setup than for their draws.
class Substream {
public:
    explicit Substream(std::uint64_t seed, std::uint64_t index = 0, std::uint64_t salt = 0)
        : state_(mix64(mix64(mix64(seed) ^ index) ^ (salt * 0x632BE59BD9B4E019ULL + 1))) {}

    std::uint64_t next_u64() {
        const std::uint64_t r = mix64(state_);
        state_ += 0x9E3779B97F4A7C15ULL;
        return r;
    }

    // Uniform draw in the open interval (0,1): 53-bit mantissa, zero rejected.
    double uniform() {
        for (;;) {
            const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }

    // Standard normal via inverse-CDF of the uniform draw.
    double normal() { return inv_norm_cdf(uniform()); }

private:
    std::uint64_t state_;
};

}  // namespace rh
