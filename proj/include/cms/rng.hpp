// Deterministic random number utilities.
//
// Every stochastic routine in the library draws from a std::mt19937_64 seeded
// through derive_seed(master, stream).  Stream splitting is plain arithmetic
// (splitmix64 of master xor a salted stream index), so a run is reproducible
// bit-for-bit from its master seed alone, independent of evaluation order or
// worker count.  Variate transforms (uniform doubles, Gaussians, categorical
// draws) are implemented here rather than with std::*_distribution, whose
// output is implementation-defined; these transforms fix the byte stream.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace cms {

// Fixed 64-bit mixer (Steele, Lea, Vigna).  Used only for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Child seed for an independent stream.  Streams are indexed; the same
// (master, stream) pair always yields the same child seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ (0xD1B54A32D192ED03ull * (stream + 1)));
}

// Uniform double in [0, 1), 53 random bits.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double uniform_in(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform01(gen);
}

// Standard Gaussian via Box-Muller (deterministic; one value per call,
// second branch discarded to keep the stream layout simple).
inline double gaussian(std::mt19937_64& gen) {
    double u1 = uniform01(gen);
    double u2 = uniform01(gen);
    while (u1 <= 0.0) u1 = uniform01(gen);  // avoid log(0)
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
}

// Index draw from non-negative weights (need not be normalized).  Walks the
// weights in order with a single uniform; falls back to the last positive
// entry if rounding pushes the target past the total.
inline std::size_t categorical(std::mt19937_64& gen, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double target = uniform01(gen) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    bool seen = false;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] <= 0.0) continue;
        last_positive = k;
        seen = true;
        acc += weights[k];
        if (target < acc) return k;
    }
    (void)seen;
    return last_positive;
}

}  // namespace cms
