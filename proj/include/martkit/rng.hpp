#pragma once

#include <cstdint>

namespace martkit {

// SplitMix64: seeds the per-replica generators.  Distinct counters give
// well-scrambled, distinct states.
struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256++: the workhorse stream.  Each replica owns one instance, so
// parallel execution never shares generator state.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        SplitMix64 sm{seed};
        for (auto& word : s_) word = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

using Rng = Xoshiro256pp;

// Independent stream for replica r of a seeded batch.  The path of replica r
// depends only on (seed, r), never on the total replica count or scheduling.
inline Rng replica_rng(std::uint64_t seed, std::int64_t replica) {
    return Rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(replica + 1));
}

}  // namespace martkit
