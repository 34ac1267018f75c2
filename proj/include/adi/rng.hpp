#pragma once

#include <cstdint>
#include <cmath>

namespace adi {

// splitmix64-based generator. Self-contained so that every stream is
// bit-reproducible across platforms and toolchains; std:: distributions are
// implementation-defined and would break the byte-identical-artifact contract.
struct Rng {
    uint64_t state = 0x9e3779b97f4a7c15ull;
    bool has_spare = false;
    double spare = 0.0;

    Rng() = default;
    explicit Rng(uint64_t seed) : state(seed ^ 0x9e3779b97f4a7c15ull) {}

    uint64_t next_u64() {
        state += 0x9e3779b97f4a7c15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // [0, n)
    uint64_t below(uint64_t n) { return n ? next_u64() % n : 0; }

    int64_t range_int(int64_t lo, int64_t hi_inclusive) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi_inclusive - lo + 1)));
    }

    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal, Box-Muller with cached spare
    double gauss() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        double u = 1.0 - uniform();  // (0, 1]
        double v = uniform();
        double r = std::sqrt(-2.0 * std::log(u));
        double a = 6.283185307179586476925286766559 * v;
        spare = r * std::sin(a);
        has_spare = true;
        return r * std::cos(a);
    }
};

// Stream derivation: hash(master, index) so per-sample streams are independent
// of generation order.
inline uint64_t mix_seed(uint64_t master, uint64_t index) {
    uint64_t z = master ^ (0x9e3779b97f4a7c15ull + (index << 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t master, uint64_t a, uint64_t b) {
    return mix_seed(mix_seed(master, a), b);
}

}  // namespace adi
