#pragma once

// Forward-mode jets. Jet<S,N> carries a value and N first partials; nesting
// Jet<Jet<...>> yields exact higher derivatives of anything written
// generically over the scalar type. Used by the frame calculus, the chart
// Christoffel evaluation and the test-function machinery.

#include <array>
#include <cmath>
#include <cstddef>

namespace kbm {

template <class S, int N>
struct Jet {
  S v{};
  std::array<S, N> d{};

  Jet() = default;
  Jet(const S& value) : v(value) {}
  template <class T,
            class = std::enable_if_t<std::is_arithmetic_v<T> &&
                                     !std::is_same_v<T, S>>>
  Jet(T value) : v(static_cast<double>(value)) {}

  static Jet variable(const S& value, int slot) {
    Jet j(value);
    j.d[slot] = S(1.0);
    return j;
  }

  Jet operator-() const {
    Jet r(-v);
    for (int i = 0; i < N; ++i) r.d[i] = -d[i];
    return r;
  }
  Jet& operator+=(const Jet& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
};

template <class S, int N>
Jet<S, N> operator+(Jet<S, N> a, const Jet<S, N>& b) { return a += b; }
template <class S, int N>
Jet<S, N> operator-(Jet<S, N> a, const Jet<S, N>& b) { return a -= b; }

template <class S, int N>
Jet<S, N> operator*(const Jet<S, N>& a, const Jet<S, N>& b) {
  Jet<S, N> r(a.v * b.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}

template <class S, int N>
Jet<S, N> operator/(const Jet<S, N>& a, const Jet<S, N>& b) {
  const S inv = S(1.0) / b.v;
  Jet<S, N> r(a.v * inv);
  for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
  return r;
}

// double mixes in at every nesting level
template <class S, int N>
Jet<S, N> operator+(const Jet<S, N>& a, double c) { return a + Jet<S, N>(c); }
template <class S, int N>
Jet<S, N> operator+(double c, const Jet<S, N>& a) { return Jet<S, N>(c) + a; }
template <class S, int N>
Jet<S, N> operator-(const Jet<S, N>& a, double c) { return a - Jet<S, N>(c); }
template <class S, int N>
Jet<S, N> operator-(double c, const Jet<S, N>& a) { return Jet<S, N>(c) - a; }
template <class S, int N>
Jet<S, N> operator*(const Jet<S, N>& a, double c) {
  Jet<S, N> r(a.v * c);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * c;
  return r;
}
template <class S, int N>
Jet<S, N> operator*(double c, const Jet<S, N>& a) { return a * c; }
template <class S, int N>
Jet<S, N> operator/(const Jet<S, N>& a, double c) { return a * (1.0 / c); }
template <class S, int N>
Jet<S, N> operator/(double c, const Jet<S, N>& a) { return Jet<S, N>(c) / a; }

using std::cos;
using std::exp;
using std::log;
using std::sin;
using std::sqrt;

template <class S, int N>
Jet<S, N> chain(const Jet<S, N>& x, const S& f, const S& fp) {
  Jet<S, N> r(f);
  for (int i = 0; i < N; ++i) r.d[i] = fp * x.d[i];
  return r;
}

template <class S, int N>
Jet<S, N> sin(const Jet<S, N>& x) { return chain(x, sin(x.v), cos(x.v)); }
template <class S, int N>
Jet<S, N> cos(const Jet<S, N>& x) { return chain(x, cos(x.v), -sin(x.v)); }
template <class S, int N>
Jet<S, N> exp(const Jet<S, N>& x) { const S e = exp(x.v); return chain(x, e, e); }
template <class S, int N>
Jet<S, N> log(const Jet<S, N>& x) { return chain(x, log(x.v), S(1.0) / x.v); }
template <class S, int N>
Jet<S, N> sqrt(const Jet<S, N>& x) {
  const S s = sqrt(x.v);
  return chain(x, s, S(0.5) / s);
}

template <class S, int N>
Jet<S, N> pow_i(Jet<S, N> x, int k) {
  Jet<S, N> r(S(1.0));
  for (int i = 0; i < k; ++i) r = r * x;
  return r;
}

inline double scalar_value(double x) { return x; }
template <class S, int N>
double scalar_value(const Jet<S, N>& x) { return scalar_value(x.v); }

}  // namespace kbm
