#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace slicemon {

// splitmix64 step. Used for seed expansion and as a standalone mixer.
constexpr uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr uint64_t mix64(uint64_t x) {
  uint64_t s = x;
  return splitmix64(s);
}

// Deterministic sub-stream seeds: hash the base seed with up to three labels.
// Every randomized component derives its own stream through this, so results
// do not depend on call order or thread scheduling.
constexpr uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0,
                               uint64_t c = 0) {
  uint64_t s = base;
  uint64_t h = splitmix64(s);
  s ^= mix64(a + 0x9e3779b97f4a7c15ULL);
  h ^= splitmix64(s);
  s ^= mix64(b + 0xc2b2ae3d27d4eb4fULL);
  h ^= splitmix64(s);
  s ^= mix64(c + 0x165667b19e3779f9ULL);
  h ^= splitmix64(s);
  return h;
}

// xoshiro256++ with splitmix64 seeding. Self-contained so streams are stable
// across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& w : s_) w = splitmix64(s);
  }

  uint64_t next() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(next() % span);
  }

  // Exponential with the given rate (events per unit time).
  double exponential(double rate) {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return -std::log(u) / rate;
  }

  // Laplace(mu, b) by inverse CDF. b == 0 degenerates to the constant mu.
  double laplace(double mu, double b) {
    if (b <= 0.0) return mu;
    const double u = uniform() - 0.5;
    const double sign = u < 0.0 ? -1.0 : 1.0;
    return mu - b * sign * std::log(1.0 - 2.0 * std::fabs(u));
  }

 private:
  static constexpr uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  uint64_t s_[4];
};

// FNV-1a over bytes; used for config/result hashing in manifests.
constexpr uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : data) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace slicemon
