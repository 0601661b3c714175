#pragma once

#include <cstdint>
#include <vector>

namespace pixcue {

// All randomness in the library flows through this generator so that results
// are reproducible across platforms and standard-library versions.
// Algorithm: xoshiro256++ 1.0 seeded via splitmix64, streams derived by
// mixing a 64-bit stream index into the seed. Bump kRngVersion if any of
// the derivations below change.
inline constexpr int kRngVersion = 1;
inline constexpr const char* kRngName = "xoshiro256++/splitmix64";

uint64_t splitmix64_next(uint64_t& state);

// Deterministic per-stream seed derivation (used e.g. for MC dropout passes).
uint64_t derive_seed(uint64_t master, uint64_t stream);

class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0);

  uint64_t next();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();

  // Uniform in [0, bound), unbiased (Lemire's method).
  uint64_t uniform_below(uint64_t bound);

  // Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double gaussian();

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // k distinct values drawn uniformly from `pool`, order of selection.
  template <typename T>
  std::vector<T> sample_without_replacement(std::vector<T> pool, size_t k) {
    std::vector<T> out;
    out.reserve(k);
    size_t n = pool.size();
    for (size_t i = 0; i < k && i < pool.size(); ++i) {
      size_t j = i + static_cast<size_t>(uniform_below(n - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  uint64_t s_[4];
};

}  // namespace pixcue
