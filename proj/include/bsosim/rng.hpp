#pragma once

#include <cstdint>
#include <string_view>

namespace bsosim {

// xoshiro256++ with splitmix64 seeding. Hand-rolled so that streams are
// bit-stable across platforms and standard-library versions; std::
// distributions are implementation-defined and would break byte-identical
// reruns.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }
    std::uint64_t state_[4];
};

// Deterministic substream derivation: hash the master seed with a stream tag
// and an index. Used to give Alice, Bob, the channel and every pair their own
// independent stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
    std::uint64_t h = master ^ 0x51c64f5de2a9d7b1ull;
    for (char c : tag) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h = Rng::splitmix64(h);
    }
    h ^= index;
    h = Rng::splitmix64(h);
    return Rng::splitmix64(h);
}

inline Rng make_stream(std::uint64_t master, std::string_view tag,
                       std::uint64_t index = 0) {
    return Rng(derive_seed(master, tag, index));
}

} // namespace bsosim
