#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace ttsr {

// splitmix64 finalizer; used to derive independent substreams from one run seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG wrapper. All randomness in the project flows through this
// class so that a fixed seed reproduces runs bit-for-bit; no use of
// std::uniform_* distributions (their output is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix64(mix64(seed) ^ mix64(stream ^ 0xabcdef1234567890ULL)));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform index in [0, n). n must be > 0.
  std::size_t next_index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  // Uniform real in [0, 1).
  double next_real() { return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0); }

  // Uniform sample of k distinct indices from [0, n), order randomized.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    k = std::min(k, n);
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + next_index(n - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ttsr
