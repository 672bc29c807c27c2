#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace oodspec {

// All randomness in the library flows through the helpers below. std::mt19937_64
// has a standard-specified output sequence, but the std::*_distribution adaptors
// do not (their algorithms are implementation-defined), so we pair the engine
// with hand-rolled transforms. Same seed => same bytes on every platform.

using Rng = std::mt19937_64;

// SplitMix64 step; used to derive well-separated seeds from user seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Collapse (seed, stream) into a single engine seed. Distinct streams derived
// from the same root seed behave as independent generators.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

Rng seeded_rng(std::uint64_t seed, std::uint64_t stream = 0);

// FNV-1a over bytes; used both for named RNG streams and config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

// Uniform draw in [0, 1) using the top 53 bits of one engine output.
double uniform01(Rng& rng);

// Uniform integer in [0, n) by rejection sampling (no modulo bias). n > 0.
std::uint64_t uniform_below(Rng& rng, std::uint64_t n);

// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
double standard_normal(Rng& rng);

// Index draw from unnormalised non-negative weights (inverse CDF walk).
std::size_t weighted_index(Rng& rng, const std::vector<double>& weights);

// In-place Fisher-Yates shuffle driven by uniform_below.
template <typename T>
void shuffle(Rng& rng, std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace oodspec
