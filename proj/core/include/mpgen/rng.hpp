#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace mpgen {

// FNV-1a 64 over the bytes, folded with the seed. Stable across platforms;
// used wherever a deterministic fingerprint of text is needed (mock replies,
// checkpoint lineage), never for content addressing against adversaries.
inline std::uint64_t stable_hash64(std::string_view text, std::uint64_t seed = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull ^ seed;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    // Final avalanche so short inputs still differ in every bit.
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    return h ^ (h >> 31);
}

// Deterministic random source. SplitMix64 core, so every draw is identical
// across platforms and compilers (std:: distributions do not guarantee that).
// Substreams are derived from a root seed plus a stream name; forking does
// not advance the parent state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n). Rejection sampling keeps the draw unbiased.
    std::uint64_t uniform(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(
                        uniform(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform_real() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double normal(double mean = 0.0, double stddev = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + spare_ * stddev;
        }
        double u1, u2;
        do {
            u1 = uniform_real();
        } while (u1 <= 0.0);
        u2 = uniform_real();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + r * std::cos(theta) * stddev;
    }

    bool bernoulli(double p) { return uniform_real() < p; }

    // Child stream seeded from (root seed, name). Parent state untouched.
    Rng fork(std::string_view name) const {
        std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
        for (unsigned char c : name) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return Rng(mix(seed_, h));
    }

    Rng fork(std::string_view name, std::uint64_t index) const {
        Rng child = fork(name);
        return Rng(mix(child.seed_, index + 1));
    }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mpgen
