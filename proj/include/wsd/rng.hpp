#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace wsd {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a, used for sub-unit hashing and stream derivation.
inline std::uint64_t hash64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Seeded random stream. Integer and shuffle primitives are hand-rolled so the
// produced sequences depend only on the engine output, not on the standard
// library's distribution implementations.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Unbiased draw in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// Derives an independent stream from the global seed and a label path, e.g.
// {"episode", "bank|n", "3"}. Iteration order over words or epochs therefore
// never shifts the per-item draws.
inline RngStream derive_stream(std::uint64_t seed,
                               std::initializer_list<std::string_view> path) {
    std::uint64_t h = splitmix64(seed);
    for (auto part : path) {
        h = splitmix64(h ^ hash64(part));
    }
    return RngStream(h);
}

}  // namespace wsd
