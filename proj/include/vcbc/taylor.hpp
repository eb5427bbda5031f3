// Truncated Taylor series in time, used as an Eigen scalar.
//
// A Taylor<N> value holds the normalized coefficients c[k] = x^(k)(t) / k! of a
// signal around the current time. Propagating these through the model and the
// controller yields the exact time derivatives required by the feedforward
// terms (p_lr', q_md', q_md'', p_mr') without symbolic expansion.
//
// All operations are lower-triangular in the coefficient index: coefficient k
// of a result depends only on coefficients <= k of the operands. Unknown
// high-order inputs can therefore be seeded with any finite placeholder; they
// never leak into lower coefficients.
#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <utility>

namespace vcbc {

template <int N>
class Taylor {
  static_assert(N >= 0);

 public:
  static constexpr int kOrder = N;

  constexpr Taylor() : c_{} {}
  // Implicit on purpose: constants promote like doubles inside Eigen expressions.
  constexpr Taylor(double v) : c_{} { c_[0] = v; }  // NOLINT

  /// The independent variable t around t0: coefficients (t0, 1, 0, ...).
  static Taylor variable(double t0) {
    Taylor r(t0);
    if constexpr (N >= 1) r.c_[1] = 1.0;
    return r;
  }

  /// Builds a series from the successive derivatives x, x', x'', ... at t0.
  template <typename Derivs>
  static Taylor from_derivatives(const Derivs& d) {
    Taylor r;
    double fact = 1.0;
    for (int k = 0; k <= N; ++k) {
      if (k > 0) fact *= k;
      r.c_[k] = d[k] / fact;
    }
    return r;
  }

  double value() const { return c_[0]; }
  double operator[](int k) const { return c_[k]; }
  double& operator[](int k) { return c_[k]; }

  /// k-th time derivative at t0.
  double derivative_value(int k) const {
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    return c_[k] * fact;
  }

  /// Series of the time derivative. The top coefficient is unknown and set to NaN.
  Taylor derivative() const {
    Taylor r;
    for (int k = 0; k < N; ++k) r.c_[k] = (k + 1) * c_[k + 1];
    r.c_[N] = std::numeric_limits<double>::quiet_NaN();
    return r;
  }

  Taylor operator-() const {
    Taylor r;
    for (int k = 0; k <= N; ++k) r.c_[k] = -c_[k];
    return r;
  }

  Taylor& operator+=(const Taylor& o) {
    for (int k = 0; k <= N; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (int k = 0; k <= N; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Taylor& operator*=(const Taylor& o) { return *this = *this * o; }
  Taylor& operator/=(const Taylor& o) { return *this = *this / o; }

  friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
  friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }

  friend Taylor operator*(const Taylor& a, const Taylor& b) {
    Taylor r;
    for (int k = 0; k <= N; ++k) {
      double s = 0.0;
      for (int i = 0; i <= k; ++i) s += a.c_[i] * b.c_[k - i];
      r.c_[k] = s;
    }
    return r;
  }

  friend Taylor operator/(const Taylor& a, const Taylor& b) {
    Taylor r;
    for (int k = 0; k <= N; ++k) {
      double s = a.c_[k];
      for (int i = 1; i <= k; ++i) s -= b.c_[i] * r.c_[k - i];
      r.c_[k] = s / b.c_[0];
    }
    return r;
  }

  // Ordering compares the value only (used by pivoting).
  friend bool operator<(const Taylor& a, const Taylor& b) { return a.c_[0] < b.c_[0]; }
  friend bool operator>(const Taylor& a, const Taylor& b) { return a.c_[0] > b.c_[0]; }
  friend bool operator<=(const Taylor& a, const Taylor& b) { return a.c_[0] <= b.c_[0]; }
  friend bool operator>=(const Taylor& a, const Taylor& b) { return a.c_[0] >= b.c_[0]; }
  friend bool operator==(const Taylor& a, const Taylor& b) { return a.c_ == b.c_; }
  friend bool operator!=(const Taylor& a, const Taylor& b) { return !(a == b); }

  friend Taylor sin(const Taylor& a) { return sincos(a).first; }
  friend Taylor cos(const Taylor& a) { return sincos(a).second; }

  friend std::pair<Taylor, Taylor> sincos(const Taylor& a) {
    Taylor s, c;
    s.c_[0] = std::sin(a.c_[0]);
    c.c_[0] = std::cos(a.c_[0]);
    for (int k = 1; k <= N; ++k) {
      double ss = 0.0, cc = 0.0;
      for (int j = 1; j <= k; ++j) {
        ss += j * a.c_[j] * c.c_[k - j];
        cc += j * a.c_[j] * s.c_[k - j];
      }
      s.c_[k] = ss / k;
      c.c_[k] = -cc / k;
    }
    return {s, c};
  }

  friend Taylor exp(const Taylor& a) {
    Taylor e;
    e.c_[0] = std::exp(a.c_[0]);
    for (int k = 1; k <= N; ++k) {
      double s = 0.0;
      for (int j = 1; j <= k; ++j) s += j * a.c_[j] * e.c_[k - j];
      e.c_[k] = s / k;
    }
    return e;
  }

  // tanh' = 1 - tanh^2
  friend Taylor tanh(const Taylor& a) {
    Taylor t, w;
    t.c_[0] = std::tanh(a.c_[0]);
    w.c_[0] = 1.0 - t.c_[0] * t.c_[0];
    for (int k = 1; k <= N; ++k) {
      double s = 0.0;
      for (int j = 1; j <= k; ++j) s += j * a.c_[j] * w.c_[k - j];
      t.c_[k] = s / k;
      double sq = 0.0;
      for (int i = 0; i <= k; ++i) sq += t.c_[i] * t.c_[k - i];
      w.c_[k] = -sq;
    }
    return t;
  }

  friend Taylor sqrt(const Taylor& a) {
    Taylor r;
    r.c_[0] = std::sqrt(a.c_[0]);
    for (int k = 1; k <= N; ++k) {
      double s = a.c_[k];
      for (int i = 1; i < k; ++i) s -= r.c_[i] * r.c_[k - i];
      r.c_[k] = s / (2.0 * r.c_[0]);
    }
    return r;
  }

  friend Taylor abs(const Taylor& a) { return a.c_[0] < 0.0 ? -a : a; }
  friend Taylor abs2(const Taylor& a) { return a * a; }
  friend Taylor conj(const Taylor& a) { return a; }
  friend Taylor real(const Taylor& a) { return a; }
  friend Taylor imag(const Taylor&) { return Taylor(0.0); }
  friend bool isfinite(const Taylor& a) {
    for (double v : a.c_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend std::ostream& operator<<(std::ostream& os, const Taylor& a) {
    os << "[";
    for (int k = 0; k <= N; ++k) os << (k ? ", " : "") << a.c_[k];
    return os << "]";
  }

 private:
  std::array<double, N + 1> c_;
};

/// Order used by the exact-derivative controller path: p_mr' needs three
/// derivatives of the link state.
using Jet = Taylor<3>;

inline double value_of(double x) { return x; }
template <int N>
double value_of(const Taylor<N>& x) {
  return x.value();
}

}  // namespace vcbc

namespace Eigen {

template <int N>
struct NumTraits<vcbc::Taylor<N>> : GenericNumTraits<double> {
  using Real = vcbc::Taylor<N>;
  using NonInteger = vcbc::Taylor<N>;
  using Nested = vcbc::Taylor<N>;
  using Literal = vcbc::Taylor<N>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = N + 1,
    AddCost = N + 1,
    MulCost = (N + 1) * (N + 2) / 2
  };
  static inline Real epsilon() { return Real(std::numeric_limits<double>::epsilon()); }
  static inline Real dummy_precision() { return Real(1e-12); }
  static inline Real highest() { return Real(std::numeric_limits<double>::max()); }
  static inline Real lowest() { return Real(std::numeric_limits<double>::lowest()); }
  static inline int digits10() { return std::numeric_limits<double>::digits10; }
};

template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<vcbc::Taylor<N>, double, BinaryOp> {
  using ReturnType = vcbc::Taylor<N>;
};
template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<double, vcbc::Taylor<N>, BinaryOp> {
  using ReturnType = vcbc::Taylor<N>;
};

}  // namespace Eigen
