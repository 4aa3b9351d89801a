#pragma once

#include <cstdint>
#include <string_view>

namespace scilit {

// SplitMix64: tiny, fast, well-distributed stream generator. Used wherever we
// need seeded determinism that is stable across platforms and stdlib versions
// (std::uniform_* distributions are implementation-defined, so we never use
// them on reproducibility-critical paths).
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound) via rejection sampling (no modulo bias).
    uint64_t next_below(uint64_t bound) {
        if (bound == 0) return 0;
        const uint64_t threshold = -bound % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

private:
    uint64_t state_;
};

// FNV-1a over raw bytes; the standard 64-bit offset basis and prime.
inline uint64_t fnv1a64(std::string_view bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Mix two seeds into one; order-sensitive.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    SplitMix64 g(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
    return g.next_u64();
}

}  // namespace scilit
