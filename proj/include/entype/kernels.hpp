#pragma once
// Vector kernels behind a runtime-selected backend. The scalar path is the
// reference; the AVX2 path must agree with it within the tolerances pinned in
// the kernel tests. Transcendentals (exp, log, tanh) are deliberately NOT
// kernels: they stay scalar libm everywhere so backend choice only perturbs
// reduction and fused-multiply rounding.

#include <cstddef>
#include <string>

namespace entype::kern {

enum class Backend { scalar, avx2 };

// Selected once per process; deterministic on a given machine. Honors the
// ENTYPE_KERNELS environment variable (scalar|avx2) on first use.
Backend active();
// Returns false (and leaves the backend unchanged) if the CPU lacks support.
bool set_backend(Backend b);
void set_backend_auto();
bool cpu_has_avx2();
std::string backend_name(Backend b);

template <class T> struct Table {
  T (*dot)(const T*, const T*, std::size_t);
  void (*axpy)(T, const T*, T*, std::size_t);            // y += a*x
  void (*scale)(T, T*, std::size_t);                     // x *= a
  void (*relu)(const T*, T*, std::size_t);               // y = max(x, 0)
  void (*relu_bw)(const T*, const T*, T*, std::size_t);  // gx += g where x > 0
  void (*adagrad)(T*, T*, T*, T, T, std::size_t);        // see adagrad() below
  std::size_t (*argmax)(const T*, std::size_t);          // first occurrence
};

template <class T> const Table<T>& table();

template <class T> inline T dot(const T* a, const T* b, std::size_t n) {
  return table<T>().dot(a, b, n);
}
template <class T> inline void axpy(T a, const T* x, T* y, std::size_t n) {
  table<T>().axpy(a, x, y, n);
}
template <class T> inline void scale(T a, T* x, std::size_t n) {
  table<T>().scale(a, x, n);
}
template <class T> inline void relu(const T* x, T* y, std::size_t n) {
  table<T>().relu(x, y, n);
}
template <class T> inline void relu_backward(const T* x, const T* g, T* gx, std::size_t n) {
  table<T>().relu_bw(x, g, gx, n);
}
// acc += g*g; v -= lr * g / (sqrt(acc) + eps); g zeroed.
template <class T> inline void adagrad(T* v, T* g, T* acc, T lr, T eps, std::size_t n) {
  table<T>().adagrad(v, g, acc, lr, eps, n);
}
template <class T> inline std::size_t argmax(const T* x, std::size_t n) {
  return table<T>().argmax(x, n);
}

}  // namespace entype::kern
