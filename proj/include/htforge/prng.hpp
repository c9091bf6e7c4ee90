#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace htforge {

// SplitMix64 with the reference constants. Every seeded choice in the
// library goes through this generator so results are bit-identical across
// platforms and easy to re-derive in other languages.
class SplitMix64 {
public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound). Plain modulo: the bias is immaterial at the
  // bounds used here and the mapping stays trivially portable.
  uint64_t below(uint64_t bound) { return next() % bound; }

  // Uniform double in [0, 1) from the top 53 bits.
  double unit() { return double(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

private:
  uint64_t state_;
};

// Per-task seed: mix the master seed with a task index through one
// SplitMix64 step. Chain calls to add more tags.
inline uint64_t derive_seed(uint64_t master, uint64_t index) {
  return SplitMix64(master ^ index).next();
}

inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b, uint64_t c) {
  return derive_seed(derive_seed(master, a, b), c);
}

}  // namespace htforge
