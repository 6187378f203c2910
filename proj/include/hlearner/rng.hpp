#pragma once

// Counter-based random draws. Every value is a pure function of a seed and
// a key tuple, so results never depend on draw order, thread scheduling or
// the standard library's distribution implementations.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace hl {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_key(std::uint64_t seed,
                                        std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : key) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Uniform in the open interval (0, 1).
inline double unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double keyed_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
  return unit_open(hash_key(seed, key));
}

/// Standard normal via Box-Muller on two independent keyed uniforms.
inline double keyed_normal(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
  const std::uint64_t h = hash_key(seed, key);
  const double u1 = unit_open(splitmix64(h ^ 0x1ULL));
  const double u2 = unit_open(splitmix64(h ^ 0x2ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Sequential stream over a counter; used where draws are naturally ordered
/// (weight init, shuffles).
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(hash_key(seed, {stream})) {}

  std::uint64_t next_u64() { return hash_key(seed_, {counter_++}); }
  double uniform() { return unit_open(next_u64()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return keyed_normal(seed_, {counter_++}); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates with a CounterStream; std::shuffle is implementation-defined.
template <typename Container>
void shuffle(Container& items, CounterStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace hl
