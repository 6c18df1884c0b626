#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace raman2d {

// SplitMix64 finalizer. Bijective on 64-bit inputs.
inline uint64_t splitmix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Deterministic child-seed derivation used throughout the project:
// child = splitmix64(parent + (index + 1) * golden_gamma).
// The map index -> child is injective for any fixed parent, so per-sample
// seeds never collide.
inline uint64_t child_seed(uint64_t parent, uint64_t index) {
    return splitmix64(parent + (index + 1) * 0x9E3779B97F4A7C15ull);
}

// mt19937_64 engine with hand-rolled distributions. The standard engine
// produces an implementation-independent sequence; std distributions do
// not, so uniform/gaussian are implemented here to keep artifacts
// reproducible.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer on [0, n).
    uint64_t below(uint64_t n) {
        // Rejection to avoid modulo bias.
        const uint64_t limit = n * ((~uint64_t{0}) / n);
        uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    // Standard normal via the Marsaglia polar method; both values of each
    // generated pair are consumed.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace raman2d
