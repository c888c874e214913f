#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "entype/errors.hpp"
#include "entype/kernels.hpp"
#include "entype/rng.hpp"

namespace entype {

// Dense row-major matrix. Shape is fixed at construction; resizing means
// constructing a new one.
template <class T> struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, T(0)) {}

  T* row(std::size_t i) { return a.data() + i * cols; }
  const T* row(std::size_t i) const { return a.data() + i * cols; }
  T& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  T at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  T* data() { return a.data(); }
  const T* data() const { return a.data(); }
  std::size_t size() const { return a.size(); }
  void zero() { std::fill(a.begin(), a.end(), T(0)); }
};

template <class T> bool all_finite(const T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

template <class T> bool all_finite(const Mat<T>& m) { return all_finite(m.data(), m.size()); }

template <class T> bool all_finite(const std::vector<T>& v) { return all_finite(v.data(), v.size()); }

// Trainable tensor: value, gradient, adagrad accumulator, all same shape.
template <class T> struct Param {
  Mat<T> v, g, acc;

  Param() = default;
  Param(std::size_t r, std::size_t c) : v(r, c), g(r, c), acc(r, c) {}

  std::size_t size() const { return v.size(); }

  void init_uniform(Rng& rng, double bound) {
    for (auto& x : v.a) x = static_cast<T>(rng.uniform(-bound, bound));
  }
  void init_glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
    init_uniform(rng, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
  }
};

// acc += g^2; v -= lr*g/(sqrt(acc)+eps); g zeroed. eps of 0 is legal.
template <class T> void adagrad_step(Param<T>& p, T lr, T eps) {
  if (!(lr > 0)) throw ConfigError("adagrad_step: learning rate must be positive");
  if (eps < 0) throw ConfigError("adagrad_step: eps must be nonnegative");
  kern::adagrad(p.v.data(), p.g.data(), p.acc.data(), lr, eps, p.size());
}

}  // namespace entype
