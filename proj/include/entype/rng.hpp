#pragma once
// splitmix64 streams derived from one root seed. Hand-rolled instead of
// <random> because std distribution outputs differ across standard library
// implementations, and every emitted artifact must be byte-reproducible for
// a given (seed, config, inputs) on one platform.

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace entype {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t next() { return mix64(state_ += 0x9E3779B97F4A7C15ull); }

  // [0, 1), 53-bit mantissa
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // [0, n) for n >= 1, via high 64 bits of a 128-bit product
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0;
    while (u1 == 0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586477 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  template <class T> void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent stream for a named stage. Does not advance the parent, so
  // stage streams are insensitive to the order they are created in.
  Rng derive(std::string_view label) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    return Rng(mix64(state_ ^ h));
  }

  Rng derive(std::string_view label, std::uint64_t k) const {
    return derive(label).derive_index(k);
  }

 private:
  Rng derive_index(std::uint64_t k) const { return Rng(mix64(state_ ^ (k * 0x9E3779B97F4A7C15ull))); }

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0;
};

}  // namespace entype
