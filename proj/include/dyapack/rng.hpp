#pragma once

#include <cstdint>
#include <vector>

#include "dyapack/errors.hpp"

namespace dyapack {

// splitmix64, used only to expand seeds into generator state.
struct splitmix64 {
  std::uint64_t state;

  explicit splitmix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// xoshiro256++ with hand-rolled distributions so that every sequence is
// bit-identical across platforms and standard library versions.  Each logical
// consumer draws from its own stream: the stream tag is folded into the seed
// expansion, so adding draws to one consumer never perturbs another.
class xoshiro256pp {
 public:
  explicit xoshiro256pp(std::uint64_t seed, std::uint64_t stream = 0) {
    splitmix64 sm(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    for (auto& w : s_) w = sm.next();
    // all-zero state is invalid for xoshiro; splitmix cannot produce four
    // zero words from any input, but keep the guard explicit
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on [0, 1) with 53 significant bits
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  bool bernoulli(double p) { return u01() < p; }

  // uniform on {0, ..., n-1}, unbiased via rejection
  int uniform_int(int n) {
    if (n <= 0) fail(errc::range_error, "uniform_int needs n >= 1");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return static_cast<int>(x % un);
  }

  // Fisher-Yates, descending index convention
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// Stream tags.  Regenerating with a different attempt (redraw) count must not
// disturb unrelated consumers, so the attempt index is folded into the tag.
namespace stream {
inline constexpr std::uint64_t band_fill = 1;
inline constexpr std::uint64_t tridiagonal_fill = 2;
inline constexpr std::uint64_t dyadic_fill = 3;
inline constexpr std::uint64_t spd_entries = 4;
inline constexpr std::uint64_t permutation = 5;
inline constexpr std::uint64_t skeleton = 6;
inline constexpr std::uint64_t recursive_node = 7;

inline constexpr std::uint64_t with_attempt(std::uint64_t tag,
                                            std::uint64_t attempt) {
  return tag | (attempt << 32);
}
}  // namespace stream

}  // namespace dyapack
