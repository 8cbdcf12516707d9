#pragma once

#include <cstdint>

namespace intp {

// Stateless counter-based generator: value(i) depends only on (seed, stream, i),
// so any element of a weight tensor can be regenerated independently.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix(key_ + counter * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform in [-1, 1) with 53 bits of resolution.
  constexpr double symmetric(std::uint64_t counter) const {
    const double unit = static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    return 2.0 * unit - 1.0;
  }

 private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace intp
