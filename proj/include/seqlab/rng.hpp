#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace seqlab {

// All randomness in the toolkit flows through this wrapper so that runs are
// reproducible from a single seed. std::mt19937_64 output is fixed by the
// standard; the draw helpers below avoid std::shuffle and the distribution
// classes, whose algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). n must be > 0.
    int next_below(int n) { return static_cast<int>(eng_() % static_cast<uint64_t>(n)); }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = next_below(i + 1);
            std::swap(v[i], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

// Derives an independent stream seed from a base seed and a stream id, so
// e.g. parameter initialization and sentence shuffling never share a stream.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
    // splitmix64 finalizer over the combined value
    uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace seqlab
