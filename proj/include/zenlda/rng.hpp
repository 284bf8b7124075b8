#pragma once

#include <cstdint>
#include <initializer_list>

namespace zenlda {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ with splitmix64 seeding. Streams are derived statelessly from
// (seed, salts...), so a worker stream for a given iteration can be
// reconstructed at any time, which is what makes checkpoint resume exact.
class Rng {
 public:
  Rng() : Rng(0) {}

  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> salts) {
    std::uint64_t x = seed;
    std::uint64_t h = splitmix64(x);
    for (std::uint64_t s : salts) {
      x ^= s + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h = splitmix64(x);
    }
    return Rng(h);
  }

  // Stream owned by one worker thread for one iteration.
  static Rng for_worker(std::uint64_t seed, std::int64_t iteration, std::int64_t partition,
                        std::int64_t worker) {
    return derive(seed, {0x57524b52ULL, static_cast<std::uint64_t>(iteration),
                         static_cast<std::uint64_t>(partition),
                         static_cast<std::uint64_t>(worker)});
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

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform double in [0, hi).
  double uniform(double hi) { return uniform() * hi; }

  // Unbiased uniform integer in [0, n), n >= 1. Lemire's method with rejection.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = -n % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  std::int32_t below_i32(std::int32_t n) {
    return static_cast<std::int32_t>(below(static_cast<std::uint64_t>(n)));
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
  std::uint64_t state_[4];
};

}  // namespace zenlda
