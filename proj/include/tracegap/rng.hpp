#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tracegap {

/// FNV-1a mix of a label into a seed; the basis for substream derivation.
inline std::uint64_t derive_seed(std::uint64_t seed, const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (const char ch : label) {
    h ^= static_cast<std::uint8_t>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Deterministic splitmix64 stream. Substreams are derived by hashing a
/// label into the parent seed, so parallel scheduling never changes what
/// any consumer draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [0, n). n must be positive.
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % n);
  }

  /// Child stream keyed by a label; independent of draws on the parent.
  Rng derive(const std::string& label) const {
    return Rng(derive_seed(state_, label));
  }

  /// One index drawn proportionally to the given non-negative weights.
  std::size_t weighted_index(const std::vector<double>& weights);

 private:
  std::uint64_t state_;
};

}  // namespace tracegap
