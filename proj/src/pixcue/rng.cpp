#include "pixcue/rng.hpp"

#include <cmath>
#include <numbers>

namespace pixcue {

uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t master, uint64_t stream) {
  uint64_t s = master ^ (0x9E3779B97F4A7C15ull * (stream + 1));
  return splitmix64_next(s);
}

static inline uint64_t rotl(uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

Rng::Rng(uint64_t seed, uint64_t stream) {
  uint64_t sm = derive_seed(seed, stream);
  s_[0] = splitmix64_next(sm);
  s_[1] = splitmix64_next(sm);
  s_[2] = splitmix64_next(sm);
  s_[3] = splitmix64_next(sm);
  if (s_[0] == 0 && s_[1] == 0 && s_[2] == 0 && s_[3] == 0) s_[0] = 1;
}

uint64_t Rng::next() {
  uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

uint64_t Rng::uniform_below(uint64_t bound) {
  if (bound == 0) return 0;
  while (true) {
    uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    uint64_t lo = static_cast<uint64_t>(m);
    if (lo < bound) {
      uint64_t threshold = (0 - bound) % bound;
      if (lo < threshold) continue;
    }
    return static_cast<uint64_t>(m >> 64);
  }
}

double Rng::gaussian() {
  // u1 in (0,1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pixcue
