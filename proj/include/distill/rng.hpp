#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace distill {

// Deterministic RNG used throughout the project. The generator is SplitMix64
// (Steele, Lea, Flood 2014); the exact output stream is part of the public
// contract so that experiments replay bit-identically across platforms and
// so tests can re-derive draws from an independent transcription of the
// algorithm:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Derived draws are likewise fixed:
//   uniform01():   (next() >> 11) * 2^-53, in [0, 1)
//   below(n):      floor(next() * n / 2^64)  (128-bit multiply-shift)
//   bernoulli(p):  uniform01() < p
//   categorical(w): u = uniform01(); smallest v with cumsum(w)[v] > u * sum(w)
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). n must be nonzero.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Index drawn proportionally to the (nonnegative) weights.
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        const double u = uniform01() * total;
        double cum = 0.0;
        for (std::size_t v = 0; v + 1 < weights.size(); ++v) {
            cum += weights[v];
            if (cum > u) return v;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

    // In-place Fisher-Yates shuffle: for i = n-1 .. 1, j = below(i+1), swap.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Deterministic sub-stream derivation: runs the SplitMix64 output function
// over the mixed words. Distinct (purpose, index) pairs give independent
// streams from one master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose,
                                 std::uint64_t index = 0) {
    Rng mix(master ^ (purpose * 0xD1B54A32D192ED03ull));
    mix.next();
    Rng mix2(mix.next() ^ (index * 0x8CB92BA72F3D8DD7ull));
    mix2.next();
    return mix2.next();
}

} // namespace distill
