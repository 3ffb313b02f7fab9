#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace rehearsal {

/// FNV-1a 64-bit. Used instead of std::hash so derived seeds are stable
/// across platforms and standard-library implementations.
constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 0xcbf29ce484222325ull) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::string_view purpose) {
  std::uint64_t h = fnv1a64(purpose);
  h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

/// One stochastic consumer of the campaign seed. Every purpose gets its own
/// stream so adding draws in one stage never perturbs another.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::string_view purpose)
      : engine_(mix_seed(seed, purpose)) {}

  explicit RngStream(std::uint64_t raw_seed) : engine_(raw_seed) {}

  std::mt19937_64& engine() { return engine_; }

  /// Uniform index in [0, n). Modulo reduction keeps the draw sequence
  /// identical across standard libraries (std::uniform_int_distribution
  /// is implementation-defined).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(engine_() % n);
  }

  /// Fisher-Yates with modulo draws; deterministic everywhere.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace rehearsal
