#include "entype/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace entype::kern {

namespace scalar {

template <class T> T dot(const T* a, const T* b, std::size_t n) {
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <class T> void axpy(T a, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <class T> void scale(T a, T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

template <class T> void relu(const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0 ? x[i] : T(0);
}

template <class T> void relu_bw(const T* x, const T* g, T* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > 0) gx[i] += g[i];
}

template <class T> void adagrad(T* v, T* g, T* acc, T lr, T eps, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] += g[i] * g[i];
    v[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
    g[i] = 0;
  }
}

template <class T> std::size_t argmax(const T* x, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > x[best]) best = i;
  return best;
}

}  // namespace scalar

namespace avx2 {
// Defined in kernels_avx2.cpp (compiled with -mavx2 -mfma).
extern const Table<float> table_f;
extern const Table<double> table_d;
}  // namespace avx2

namespace {

constexpr Table<float> scalar_f = {scalar::dot<float>,     scalar::axpy<float>,
                                   scalar::scale<float>,   scalar::relu<float>,
                                   scalar::relu_bw<float>, scalar::adagrad<float>,
                                   scalar::argmax<float>};
constexpr Table<double> scalar_d = {scalar::dot<double>,     scalar::axpy<double>,
                                    scalar::scale<double>,   scalar::relu<double>,
                                    scalar::relu_bw<double>, scalar::adagrad<double>,
                                    scalar::argmax<double>};

struct State {
  Backend backend;
  const Table<float>* f;
  const Table<double>* d;
};

State& state() {
  static State s = [] {
    State st{Backend::scalar, &scalar_f, &scalar_d};
    bool want_avx2 = cpu_has_avx2();
    if (const char* env = std::getenv("ENTYPE_KERNELS")) {
      std::string v(env);
      if (v == "scalar") want_avx2 = false;
      else if (v == "avx2" && !cpu_has_avx2())
        throw std::runtime_error("ENTYPE_KERNELS=avx2 but CPU lacks AVX2");
    }
    if (want_avx2) st = {Backend::avx2, &avx2::table_f, &avx2::table_d};
    return st;
  }();
  return s;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active() { return state().backend; }

bool set_backend(Backend b) {
  if (b == Backend::avx2 && !cpu_has_avx2()) return false;
  State& s = state();
  s.backend = b;
  if (b == Backend::avx2) {
    s.f = &avx2::table_f;
    s.d = &avx2::table_d;
  } else {
    s.f = &scalar_f;
    s.d = &scalar_d;
  }
  return true;
}

void set_backend_auto() { set_backend(cpu_has_avx2() ? Backend::avx2 : Backend::scalar); }

std::string backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

template <> const Table<float>& table<float>() { return *state().f; }
template <> const Table<double>& table<double>() { return *state().d; }

}  // namespace entype::kern
