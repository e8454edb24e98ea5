#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace mlcop {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seedable uniform stream. Uniforms are produced from the top 53 bits of a
/// Mersenne-Twister draw, offset by half an ulp so values lie strictly in
/// (0,1); the mapping is platform-independent.
class rng_stream {
  public:
    explicit rng_stream(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    double next_uniform() {
        const std::uint64_t bits = gen_() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1p-53;
    }

    std::uint64_t next_u64() { return gen_(); }

    // Unbiased draw from {0, ..., n-1} by rejection.
    std::size_t next_below(std::size_t n) {
        const std::uint64_t limit = ~0ULL - ~0ULL % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % n);
    }

  private:
    std::mt19937_64 gen_;
};

/// Stream derivation rule: substream k of a master seed is seeded with
/// splitmix64 applied to the master xor a fixed odd multiple of k. Replication
/// results are therefore reproducible independent of thread scheduling.
inline rng_stream derive_stream(std::uint64_t master, std::uint64_t k) {
    return rng_stream(splitmix64(master ^ (0x9e3779b97f4a7c15ULL * (k + 1))));
}

inline rng_stream derive_stream(std::uint64_t master, std::uint64_t a,
                                std::uint64_t b) {
    return derive_stream(splitmix64(master ^ (0xd1b54a32d192ed03ULL * (a + 1))), b);
}

template <class Rng>
inline void shuffle_in_place(std::vector<double>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.next_below(i)]);
    }
}

}  // namespace mlcop
