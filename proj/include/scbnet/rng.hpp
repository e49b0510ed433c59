#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace scbnet {

// Deterministic random source. std::normal_distribution and std::shuffle are
// implementation-defined, so the Box-Muller transform and Fisher-Yates walk
// live here where the byte stream is pinned by mt19937_64 alone.
class Rng {
public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // uniform double in [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // standard normal via Box-Muller, one spare cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // uniform index in [0, n), n >= 1
  size_t below(size_t n) {
    return static_cast<size_t>(
        (static_cast<__uint128_t>(gen_()) * n) >> 64);
  }

  template <class T>
  void fill_normal(std::vector<T>& v, double stddev) {
    for (auto& x : v) x = static_cast<T>(normal() * stddev);
  }

  template <class It>
  void shuffle(It first, It last) {
    const size_t n = static_cast<size_t>(last - first);
    for (size_t i = n; i > 1; --i) {
      std::swap(first[i - 1], first[below(i)]);
    }
  }

private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable seed derivation for sub-streams (per-epoch shuffles, sweep cells):
// FNV-1a over the tag folded into the master seed, finished with splitmix64.
inline uint64_t mix_seed(uint64_t master, std::string_view tag) {
  uint64_t h = 1469598103934665603ull ^ master;
  for (unsigned char ch : tag) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  h += 0x9e3779b97f4a7c15ull;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  return h ^ (h >> 31);
}

}  // namespace scbnet
