#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace dnsfp {

// SplitMix64 finalizer. Seeds for per-class, per-tree and per-fold streams
// are derived through this so results do not depend on draw order.
constexpr uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr uint64_t mix_seed(uint64_t base, uint64_t salt) {
    return splitmix64(base ^ splitmix64(salt));
}

constexpr uint64_t mix_seed(uint64_t base, uint64_t salt1, uint64_t salt2) {
    return splitmix64(mix_seed(base, salt1) ^ splitmix64(salt2 + 0x632be59bd9b4e019ULL));
}

// Deterministic RNG. std::mt19937_64 output is fixed by the standard; the
// reductions below replace std::uniform_*_distribution, whose mapping is
// implementation-defined, so identical seeds give identical streams on any
// platform and standard library.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    // Uniform in [0, bound); bound > 0. Rejection keeps the draw unbiased.
    uint64_t below(uint64_t bound) {
        const uint64_t limit =
            std::numeric_limits<uint64_t>::max() -
            std::numeric_limits<uint64_t>::max() % bound;
        uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % bound;
    }

    // Uniform integer in [lo, hi], inclusive.
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return real() < p; }

    // Fisher-Yates; std::shuffle is implementation-defined.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    // k distinct indices from [0, n), ascending (Floyd's sampling).
    std::vector<uint32_t> sample_indices(size_t n, size_t k);

private:
    std::mt19937_64 engine_;
};

}  // namespace dnsfp
