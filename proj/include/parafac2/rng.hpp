#ifndef PARAFAC2_RNG_HPP_
#define PARAFAC2_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace parafac2 {

// Self-contained xoshiro256++ generator seeded through splitmix64. Keeps
// every sampled stream bit-reproducible for a given seed, independent of the
// standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Marsaglia polar method; caches the second deviate.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, q;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    const double f = std::sqrt(-2.0 * std::log(q) / q);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Splittable counter scheme: a master seed plus a tag and indices map to an
// independent stream. Used everywhere a sub-computation needs its own rng so
// parallel schedules cannot change results.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = master ^ 0x6a09e667f3bcc908ULL;
  for (char c : tag) {
    std::uint64_t x = h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h = Rng::splitmix64(x);
  }
  for (std::uint64_t idx : indices) {
    std::uint64_t x = h ^ (idx + 0x9e3779b97f4a7c15ULL);
    h = Rng::splitmix64(x);
  }
  std::uint64_t x = h;
  return Rng::splitmix64(x);
}

}  // namespace parafac2

#endif  // PARAFAC2_RNG_HPP_
