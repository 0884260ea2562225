#pragma once

// Truncated multivariate Taylor numbers in commuting nilpotent infinitesimals
// e_0..e_{d-1} with e_i^2 = 0.  A Jet of depth d stores one coefficient per subset
// of the infinitesimals, so the coefficient at mask (1<<a)|(1<<b) is the mixed
// directional derivative along the directions seeded into e_a and e_b.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace rollkit {

class Jet {
 public:
  static constexpr int kMaxDepth = 5;
  static constexpr int kSize = 1 << kMaxDepth;

  Jet() = default;
  Jet(double v) { c_[0] = v; }  // NOLINT(google-explicit-constructor)

  int depth() const { return depth_; }
  int width() const { return 1 << depth_; }
  double value() const { return c_[0]; }
  double operator[](unsigned mask) const { return c_[mask]; }
  double& operator[](unsigned mask) { return c_[mask]; }

  void raise_depth(int d) {
    if (d > kMaxDepth) throw std::length_error("Jet: nesting depth exceeds kMaxDepth");
    depth_ = std::max(depth_, d);
  }

  Jet& operator+=(const Jet& o) {
    raise_depth(o.depth_);
    for (int a = 0; a < o.width(); ++a) c_[a] += o.c_[a];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    raise_depth(o.depth_);
    for (int a = 0; a < o.width(); ++a) c_[a] -= o.c_[a];
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }
  Jet& operator*=(double s) {
    for (int a = 0; a < width(); ++a) c_[a] *= s;
    return *this;
  }

  friend Jet operator-(Jet a) {
    for (int k = 0; k < a.width(); ++k) a.c_[k] = -a.c_[k];
    return a;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double b) { a.c_[0] += b; return a; }
  friend Jet operator+(double b, Jet a) { a.c_[0] += b; return a; }
  friend Jet operator-(Jet a, double b) { a.c_[0] -= b; return a; }
  friend Jet operator-(double b, const Jet& a) { return b + (-a); }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }
  friend Jet operator/(double s, const Jet& a) { return s * inverse(a); }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * inverse(b); }

  friend Jet operator*(const Jet& x, const Jet& y) {
    Jet out;
    out.depth_ = std::max(x.depth_, y.depth_);
    const unsigned full = static_cast<unsigned>(out.width() - 1);
    for (unsigned a = 0; a <= full; ++a) {
      const double xa = x.c_[a];
      if (xa == 0.0) continue;
      const unsigned comp = full & ~a;
      for (unsigned b = comp;; b = (b - 1) & comp) {
        out.c_[a | b] += xa * y.c_[b];
        if (b == 0) break;
      }
    }
    return out;
  }

  friend bool operator<(const Jet& a, const Jet& b) { return a.value() < b.value(); }
  friend bool operator>(const Jet& a, const Jet& b) { return a.value() > b.value(); }
  friend bool operator<=(const Jet& a, const Jet& b) { return a.value() <= b.value(); }
  friend bool operator>=(const Jet& a, const Jet& b) { return a.value() >= b.value(); }
  friend bool operator==(const Jet& a, const Jet& b) { return a.c_ == b.c_; }
  friend bool operator!=(const Jet& a, const Jet& b) { return !(a == b); }

  // f(x0 + n) = sum_k f^(k)(x0) n^k / k!, exact because n^(depth+1) = 0.
  template <class Derivatives>
  friend Jet apply_series(const Jet& x, Derivatives&& derivative_over_factorial) {
    Jet n = x;
    n.c_[0] = 0.0;
    Jet r = derivative_over_factorial(x.depth_);
    for (int k = x.depth_ - 1; k >= 0; --k) r = r * n + derivative_over_factorial(k);
    r.raise_depth(x.depth_);
    return r;
  }

  friend Jet inverse(const Jet& x) {
    const double v = x.value();
    return apply_series(x, [v](int k) {
      double d = 1.0 / v;
      for (int i = 0; i < k; ++i) d *= -1.0 / v;
      return d;
    });
  }
  friend Jet sqrt(const Jet& x) {
    const double v = x.value();
    return apply_series(x, [v](int k) {
      double c = 1.0;
      for (int i = 0; i < k; ++i) c *= (0.5 - i) / (i + 1);
      return c * std::pow(v, 0.5 - k);
    });
  }
  friend Jet sin(const Jet& x) {
    const double s = std::sin(x.value()), c = std::cos(x.value());
    return apply_series(x, [s, c](int k) {
      const double d[4] = {s, c, -s, -c};
      double f = 1.0;
      for (int i = 2; i <= k; ++i) f *= i;
      return d[k % 4] / f;
    });
  }
  friend Jet cos(const Jet& x) {
    const double s = std::sin(x.value()), c = std::cos(x.value());
    return apply_series(x, [s, c](int k) {
      const double d[4] = {c, -s, -c, s};
      double f = 1.0;
      for (int i = 2; i <= k; ++i) f *= i;
      return d[k % 4] / f;
    });
  }
  friend Jet exp(const Jet& x) {
    const double e = std::exp(x.value());
    return apply_series(x, [e](int k) {
      double f = 1.0;
      for (int i = 2; i <= k; ++i) f *= i;
      return e / f;
    });
  }
  friend Jet abs(const Jet& x) { return x.value() < 0.0 ? -x : x; }
  friend Jet abs2(const Jet& x) { return x * x; }
  friend bool isfinite(const Jet& x) {
    for (int a = 0; a < x.width(); ++a)
      if (!std::isfinite(x.c_[a])) return false;
    return true;
  }

  friend std::ostream& operator<<(std::ostream& os, const Jet& x) {
    os << "Jet(" << x.value() << ", depth " << x.depth_ << ")";
    return os;
  }

 private:
  std::array<double, kSize> c_{};
  int depth_ = 0;
};

inline double value_of(double v) { return v; }
inline double value_of(const Jet& v) { return v.value(); }

}  // namespace rollkit

namespace Eigen {

template <>
struct NumTraits<rollkit::Jet> {
  using Real = rollkit::Jet;
  using NonInteger = rollkit::Jet;
  using Nested = rollkit::Jet;
  using Literal = rollkit::Jet;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 8,
    AddCost = 8,
    MulCost = 32
  };
  static inline Real epsilon() { return Real(std::numeric_limits<double>::epsilon()); }
  static inline Real dummy_precision() { return Real(1e-12); }
  static inline Real highest() { return Real(std::numeric_limits<double>::max()); }
  static inline Real lowest() { return Real(std::numeric_limits<double>::lowest()); }
  static inline int digits10() { return std::numeric_limits<double>::digits10; }
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<rollkit::Jet, double, BinaryOp> {
  using ReturnType = rollkit::Jet;
};
template <typename BinaryOp>
struct ScalarBinaryOpTraits<double, rollkit::Jet, BinaryOp> {
  using ReturnType = rollkit::Jet;
};

}  // namespace Eigen
