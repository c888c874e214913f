#pragma once
// Forward/backward building blocks. Hot paths take raw pointers with shapes
// validated by the calling model; the vector overloads validate and throw.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "entype/tensor.hpp"

namespace entype {

// Probabilities are clamped into [kProbEps, 1-kProbEps] before logs.
inline constexpr double kProbEps = 1e-7;

namespace detail {
template <class T> constexpr T sigmoid_arg_clamp();
// exp(-30) keeps double sigmoid strictly inside (0,1); exp(-15) does the
// same for float, where exp(-30) would round the sum to 1.0f exactly.
template <> constexpr double sigmoid_arg_clamp<double>() { return 30.0; }
template <> constexpr float sigmoid_arg_clamp<float>() { return 15.0f; }
}  // namespace detail

template <class T> T sigmoid(T x) {
  const T k = detail::sigmoid_arg_clamp<T>();
  T c = x > k ? k : (x < -k ? -k : x);
  if (c >= 0) {
    T e = std::exp(-c);
    return T(1) / (T(1) + e);
  }
  T e = std::exp(c);
  return e / (T(1) + e);
}

// Derivative of the clamped forward above w.r.t. x, given p = sigmoid(x).
template <class T> T sigmoid_grad(T x, T p) {
  const T k = detail::sigmoid_arg_clamp<T>();
  if (x > k || x < -k) return T(0);
  return p * (T(1) - p);
}

template <class T> T clamp_prob(T p) {
  const T lo = static_cast<T>(kProbEps);
  const T hi = T(1) - static_cast<T>(kProbEps);
  return p < lo ? lo : (p > hi ? hi : p);
}

template <class T> T bce(T y, T p) {
  T pc = clamp_prob(p);
  return -(y * std::log(pc) + (T(1) - y) * std::log(T(1) - pc));
}

// d bce / d p. Zero in the clamped flats, matching the forward exactly.
template <class T> T bce_grad(T y, T p) {
  const T lo = static_cast<T>(kProbEps);
  const T hi = T(1) - static_cast<T>(kProbEps);
  if (p < lo || p > hi) return T(0);
  return -y / p + (T(1) - y) / (T(1) - p);
}

// y = W x (+ b). W is rows x cols, x has cols entries, y rows entries.
template <class T> void matvec(const Mat<T>& W, const T* x, const T* b, T* y) {
  for (std::size_t i = 0; i < W.rows; ++i) y[i] = kern::dot(W.row(i), x, W.cols) + (b ? b[i] : T(0));
}

// dW += dy x^T; db += dy; dx += W^T dy. db/dx may be null.
template <class T>
void matvec_bwd(const Mat<T>& W, const T* x, const T* dy, Mat<T>& dW, T* db, T* dx) {
  for (std::size_t i = 0; i < W.rows; ++i) {
    kern::axpy(dy[i], x, dW.row(i), W.cols);
    if (db) db[i] += dy[i];
    if (dx) kern::axpy(dy[i], W.row(i), dx, W.cols);
  }
}

template <class T>
void dense_forward(const Mat<T>& W, const std::vector<T>& x, const std::vector<T>* b,
                   std::vector<T>& y) {
  if (x.size() != W.cols)
    throw ShapeError("dense: weight is " + std::to_string(W.rows) + "x" + std::to_string(W.cols) +
                     ", input has " + std::to_string(x.size()));
  if (b && b->size() != W.rows)
    throw ShapeError("dense: weight is " + std::to_string(W.rows) + "x" + std::to_string(W.cols) +
                     ", bias has " + std::to_string(b->size()));
  y.assign(W.rows, T(0));
  matvec(W, x.data(), b ? b->data() : nullptr, y.data());
}

// Gathers table rows into out (ids.size() x table.cols, position-major).
template <class T>
void lookup_forward(const Mat<T>& table, const std::vector<std::uint32_t>& ids, Mat<T>& out) {
  out = Mat<T>(ids.size(), table.cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= table.rows)
      throw IndexError("lookup: id " + std::to_string(ids[i]) + " out of range (table has " +
                       std::to_string(table.rows) + " rows)");
    std::copy(table.row(ids[i]), table.row(ids[i]) + table.cols, out.row(i));
  }
}

template <class T>
void lookup_backward(Mat<T>& table_grad, const std::vector<std::uint32_t>& ids, const Mat<T>& dout) {
  for (std::size_t i = 0; i < ids.size(); ++i)
    kern::axpy(T(1), dout.row(i), table_grad.row(ids[i]), table_grad.cols);
}

// Narrow 1-d convolution over a position-major sequence E (seq x d) with one
// flat filter of width w (w*d entries), rectifier applied inside:
//   map[i] = relu(dot(E[i..i+w), filt) + bias), i in [0, seq-w].
// pre (optional) receives the pre-activation values.
template <class T>
void conv1d_narrow(const Mat<T>& E, const T* filt, T bias, std::size_t w, T* map, T* pre) {
  if (w == 0 || w > E.rows)
    throw ShapeError("conv1d_narrow: width " + std::to_string(w) + " invalid for sequence of " +
                     std::to_string(E.rows));
  const std::size_t n = E.rows - w + 1;
  const std::size_t wd = w * E.cols;
  for (std::size_t i = 0; i < n; ++i) {
    T u = kern::dot(E.row(i), filt, wd) + bias;
    if (pre) pre[i] = u;
    map[i] = u > 0 ? u : T(0);
  }
}

// Max with first-occurrence index.
template <class T> std::pair<T, std::size_t> maxpool(const T* x, std::size_t n) {
  if (n == 0) throw ShapeError("maxpool: empty input");
  std::size_t j = kern::argmax(x, n);
  return {x[j], j};
}

// In-place stable softmax.
template <class T> void softmax(T* z, std::size_t n) {
  T m = z[kern::argmax(z, n)];
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = std::exp(z[i] - m);
    s += z[i];
  }
  for (std::size_t i = 0; i < n; ++i) z[i] /= s;
}

// Central-difference gradient audit. Call after a forward+backward pass has
// left analytic gradients in each param's g; loss must recompute the same
// scalar from current values without touching gradients.
struct GradCheckReport {
  double max_rel_err = 0;
  std::string worst;
};

template <class T>
GradCheckReport grad_check(const std::vector<std::pair<std::string, Param<T>*>>& params,
                           const std::function<double()>& loss, double h = 1e-5) {
  GradCheckReport rep;
  for (auto& [name, p] : params) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      T saved = p->v.a[i];
      p->v.a[i] = saved + static_cast<T>(h);
      double lp = loss();
      p->v.a[i] = saved - static_cast<T>(h);
      double lm = loss();
      p->v.a[i] = saved;
      double num = (lp - lm) / (2 * h);
      double ana = static_cast<double>(p->g.a[i]);
      double denom = std::max(std::abs(num), std::abs(ana));
      if (denom < 1e-7) continue;
      double rel = std::abs(num - ana) / denom;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(ana) +
                    " numeric=" + std::to_string(num);
      }
    }
  }
  return rep;
}

}  // namespace entype
