#include "oodspec/rng.hpp"

#include <cmath>
#include <numbers>

#include "oodspec/error.hpp"

namespace oodspec {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t state = seed;
    std::uint64_t a = splitmix64(state);
    state = a ^ stream;
    std::uint64_t b = splitmix64(state);
    return b;
}

Rng seeded_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix_seed(seed, stream));
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    if (n == 0) fail(errc::domain_error, "uniform_below: n must be positive");
    // Rejection sampling over the smallest power-of-two envelope.
    std::uint64_t mask = ~0ULL;
    if ((n & (n - 1)) != 0 || n == 1) {
        std::uint64_t v = n - 1;
        v |= v >> 1; v |= v >> 2; v |= v >> 4;
        v |= v >> 8; v |= v >> 16; v |= v >> 32;
        mask = v;
    } else {
        mask = n - 1;
    }
    for (;;) {
        std::uint64_t draw = rng() & mask;
        if (draw < n) return draw;
    }
}

double standard_normal(Rng& rng) {
    // Box-Muller; u1 nudged away from zero so log() stays finite.
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t weighted_index(Rng& rng, const std::vector<double>& weights) {
    if (weights.empty()) fail(errc::domain_error, "weighted_index: empty weight vector");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) fail(errc::domain_error, "weighted_index: negative or NaN weight");
        total += w;
    }
    if (total <= 0.0) fail(errc::domain_error, "weighted_index: weights sum to zero");
    double x = uniform01(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (x < acc) return i;
    }
    return weights.size() - 1;
}

}  // namespace oodspec
