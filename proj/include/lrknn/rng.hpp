#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace lrknn {

// Deterministic RNG used for every randomized operation. Self-contained so
// that one published seed reproduces results independently of the standard
// library implementation. Generator is xoshiro256**, seeded through
// splitmix64; sub-streams are derived by hashing (master seed, purpose tag,
// index), so split/injection/generation/bootstrap draws never overlap.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Sub-stream seed for (master, tag, index).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
  std::uint64_t s = master ^ fnv1a64(tag);
  splitmix64(s);
  s ^= 0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL;
  return splitmix64(s);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  Rng(std::uint64_t master, std::string_view tag, std::uint64_t index = 0)
      : Rng(derive_seed(master, tag, index)) {}

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0,1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

} // namespace lrknn
