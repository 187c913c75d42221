#pragma once

#include <cstdint>
#include <random>

namespace repufed {

// splitmix64; used to mix seeds for independent substreams.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive a substream seed from a run seed and up to three stream tags
// (e.g. vehicle id, slot). Same inputs always give the same stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = mix64(seed);
    s = mix64(s ^ mix64(a + 0x1ULL));
    s = mix64(s ^ mix64(b + 0x2ULL));
    s = mix64(s ^ mix64(c + 0x3ULL));
    return s;
}

// Thin deterministic RNG. The raw engine is std::mt19937_64; the
// conversions below are pinned here rather than taken from <random>
// distributions so that streams are identical across stdlib versions.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in (0, 1): 53-bit mantissa, zero rejected.
    double uniform01() {
        for (;;) {
            double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // [0, n)
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

    double normal(double mean = 0.0, double stddev = 1.0) {
        // Box-Muller, one value per call (the pair's partner is dropped
        // to keep the stream position easy to reason about).
        double u1 = uniform01();
        double u2 = uniform01();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        return mean + stddev * z;
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

}  // namespace repufed
