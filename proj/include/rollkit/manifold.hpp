#pragma once

#include "rollkit/errors.hpp"
#include "rollkit/jet.hpp"
#include "rollkit/matrix_core.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rollkit {

template <class S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
using JetVector = VecT<Jet>;
using JetMatrix = MatT<Jet>;

inline constexpr double kDomainTolerance = 1e-6;

/// Coefficients c[k][a][b] of a metric connection on a bundle with an orthonormal
/// frame, differentiated along the n tangent frame directions.  For the tangent
/// bundle this is gamma[k][j][i] = <nabla_{e_k} e_j, e_i>; for the normal bundle
/// it is gamma_perp[k][lambda][kappa] = <nabla^perp_{e_k} eps_lambda, eps_kappa>.
/// Indices are 0-based.
template <class S>
class ConnectionCoefficients {
 public:
  ConnectionCoefficients() = default;
  ConnectionCoefficients(int directions, int fibre)
      : n_(directions), p_(fibre), data_(static_cast<std::size_t>(n_ * p_ * p_), S(0.0)) {}

  int directions() const { return n_; }
  int fibre() const { return p_; }

  S& operator()(int k, int a, int b) { return data_[index(k, a, b)]; }
  const S& operator()(int k, int a, int b) const { return data_[index(k, a, b)]; }

  /// Matrix G with G(a, b) = c[k][a][b].
  MatT<S> slice(int k) const {
    MatT<S> g(p_, p_);
    for (int a = 0; a < p_; ++a)
      for (int b = 0; b < p_; ++b) g(a, b) = (*this)(k, a, b);
    return g;
  }

  double max_abs_difference(const ConnectionCoefficients& o) const {
    double m = 0.0;
    for (std::size_t q = 0; q < data_.size(); ++q)
      m = std::max(m, std::abs(value_of(data_[q]) - value_of(o.data_[q])));
    return m;
  }

  double antisymmetry_residual() const {
    double m = 0.0;
    for (int k = 0; k < n_; ++k)
      for (int a = 0; a < p_; ++a)
        for (int b = 0; b < p_; ++b)
          m = std::max(m, std::abs(value_of((*this)(k, a, b)) + value_of((*this)(k, b, a))));
    return m;
  }

 private:
  std::size_t index(int k, int a, int b) const {
    return static_cast<std::size_t>((k * p_ + a) * p_ + b);
  }
  int n_ = 0;
  int p_ = 0;
  std::vector<S> data_;
};

using ChristoffelTensor = ConnectionCoefficients<double>;
using NormalChristoffel = ConnectionCoefficients<double>;

/// Isometric embedding of a chart into R^N with tangent and normal frames there.
struct AmbientData {
  int N = 0;
  int nu = 0;
  std::function<Vector(const Vector&)> embedding;
  std::function<Matrix(const Vector&)> frame;         // N x n, columns iota_* e_j
  std::function<Matrix(const Vector&)> normal_frame;  // N x nu
};

/// A Riemannian manifold in representation coordinates R^m.  The frame columns are
/// orthonormal for the Euclidean inner product of R^m restricted to the tangent
/// spaces of the constraint set, and every formula extends to an open neighborhood
/// of that set, which is what lets brackets be computed ambiently.
struct FramedChart {
  std::string name;
  int n = 0;
  int m = 0;
  std::function<Matrix(const Vector&)> frame;  // m x n
  /// Reason the point is outside the chart, or nullopt.
  std::function<std::optional<std::string>(const Vector&)> domain_violation;
  std::function<Vector(const Vector&)> retraction;
  std::optional<AmbientData> ambient;
  std::function<ChristoffelTensor(const Vector&)> christoffel_closed_form;  // may be empty

  // Same formulas over Jet scalars; present for the built-ins so brackets can be
  // taken exactly.  Empty for charts that only support numeric differentiation.
  std::function<JetMatrix(const JetVector&)> frame_jet;
  std::function<ConnectionCoefficients<Jet>(const JetVector&)> christoffel_jet;

  Vector base_point;
  std::function<Vector(std::mt19937_64&)> sample;  // random point of the domain

  bool in_domain(const Vector& x) const {
    return x.size() == m && x.allFinite() && !domain_violation(x).has_value();
  }
  void require_domain(const Vector& x) const {
    if (x.size() != m)
      throw std::invalid_argument(name + ": point has dimension " + std::to_string(x.size()) +
                                  ", expected " + std::to_string(m));
    if (auto why = domain_violation(x)) throw DomainError(name + ": " + *why);
  }
  bool has_exact_derivatives() const { return frame_jet && christoffel_jet; }
};

namespace charts {

// ---------------------------------------------------------------- euclidean

template <class S>
MatT<S> euclidean_frame(const VecT<S>& x) {
  return MatT<S>::Identity(x.size(), x.size());
}

// ---------------------------------------------------------------- sphere
//
// Points x_0..x_n of the unit sphere in R^{n+1}, s_j = sum_{r >= j} x_r^2.

template <class S>
std::vector<S> sphere_tail_sums(const VecT<S>& x) {
  const int m = static_cast<int>(x.size());
  std::vector<S> s(static_cast<std::size_t>(m) + 1, S(0.0));
  for (int j = m - 1; j >= 0; --j) s[j] = s[j + 1] + x[j] * x[j];
  return s;
}

template <class S>
void sphere_require_regular(const VecT<S>& x, int pole_sign) {
  const int n = static_cast<int>(x.size()) - 1;
  if (pole_sign * value_of(x[n]) <= 0.0)
    throw DomainError("sphere: x_n has the wrong sign for this chart");
  if (value_of(x[n]) * value_of(x[n]) <= 1e-20) throw DomainError("sphere: s_n <= eps");
}

template <class S>
MatT<S> sphere_frame(const VecT<S>& x, int pole_sign) {
  using std::sqrt;
  sphere_require_regular(x, pole_sign);
  const int n = static_cast<int>(x.size()) - 1;
  const auto s = sphere_tail_sums(x);
  MatT<S> e = MatT<S>::Constant(n + 1, n, S(0.0));
  for (int j = 1; j <= n; ++j) {
    const S scale = sqrt(s[j] / s[j - 1]);
    const S coef = x[j - 1] / s[j];
    e(j - 1, j - 1) = -scale;
    for (int r = j; r <= n; ++r) e(r, j - 1) = scale * coef * x[r];
  }
  return e;
}

template <class S>
ConnectionCoefficients<S> sphere_christoffel(const VecT<S>& x, int pole_sign) {
  using std::sqrt;
  sphere_require_regular(x, pole_sign);
  const int n = static_cast<int>(x.size()) - 1;
  const auto s = sphere_tail_sums(x);
  ConnectionCoefficients<S> g(n, n);
  // 1-based: Gamma[k][j][k] = -Gamma[k][k][j] = x_{j-1} / sqrt(s_{j-1} s_j) for j < k.
  for (int k = 1; k <= n; ++k) {
    for (int j = 1; j < k; ++j) {
      const S v = x[j - 1] / sqrt(s[j - 1] * s[j]);
      g(k - 1, j - 1, k - 1) = v;
      g(k - 1, k - 1, j - 1) = -v;
    }
  }
  return g;
}

// ---------------------------------------------------------------- SE(3)
//
// Representation (C row-major, r): C at offsets 0..8, r at 9..11.

inline Matrix se3_generator(int a) {
  static const SkewIndex idx[3] = {{1, 2}, {1, 3}, {2, 3}};
  return skew_basis(3, idx[a]) / std::sqrt(2.0);
}

template <class S>
MatT<S> se3_rotation_block(const VecT<S>& x) {
  MatT<S> c(3, 3);
  for (int r = 0; r < 3; ++r)
    for (int q = 0; q < 3; ++q) c(r, q) = x[3 * r + q];
  return c;
}

template <class S>
MatT<S> se3_frame(const VecT<S>& x) {
  const MatT<S> c = se3_rotation_block(x);
  MatT<S> e = MatT<S>::Constant(12, 6, S(0.0));
  for (int a = 0; a < 3; ++a) {
    const MatT<S> y = c * se3_generator(a).cast<S>();
    for (int r = 0; r < 3; ++r)
      for (int q = 0; q < 3; ++q) e(3 * r + q, a) = y(r, q);
  }
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < 3; ++r) e(9 + r, 3 + k) = c(r, k);
  return e;
}

template <class S>
ConnectionCoefficients<S> se3_christoffel() {
  // Frame order Y1, Y2, Y3, X1, X2, X3.
  const double c = 1.0 / (2.0 * std::sqrt(2.0));
  const double d = 1.0 / std::sqrt(2.0);
  ConnectionCoefficients<S> g(6, 6);
  auto set = [&g](int k, int j, int i, double v) {
    g(k, j, i) = S(v);
    g(k, i, j) = S(-v);
  };
  set(0, 1, 2, -c);  // nabla_Y1 Y2 = -c Y3
  set(1, 0, 2, c);   // nabla_Y2 Y1 = c Y3
  set(1, 2, 0, -c);  // nabla_Y2 Y3 = -c Y1
  set(2, 0, 1, -c);  // nabla_Y3 Y1 = -c Y2
  set(0, 4, 3, d);   // nabla_Y1 X2 = X1 / sqrt2
  set(1, 5, 3, d);   // nabla_Y2 X3 = X1 / sqrt2
  set(2, 5, 4, d);   // nabla_Y3 X3 = X2 / sqrt2
  return g;
}

// Column-major index of entry (row, col) of a 4x4 matrix flattened into R^16.
inline int r16(int row, int col) { return row + 4 * col; }

inline Vector vec16(const Matrix& m4) {
  Vector v(16);
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) v[r16(r, c)] = m4(r, c);
  return v;
}

inline Matrix mat16(const Vector& v) {
  Matrix m(4, 4);
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) m(r, c) = v[r16(r, c)];
  return m;
}

/// Normal directions of SO(3) x R^3 inside R^16 at rotation C: Upsilon_1..3, Psi_1..3,
/// Xi_1..4.
inline Matrix se3_normal_frame_16(const Matrix& c) {
  Matrix nf = Matrix::Zero(16, 10);
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (int a = 0; a < 3; ++a) {
    Matrix s = Matrix::Zero(3, 3);
    s(pairs[a][0], pairs[a][1]) = s(pairs[a][1], pairs[a][0]) = 1.0 / std::sqrt(2.0);
    Matrix m4 = Matrix::Zero(4, 4);
    m4.topLeftCorner(3, 3) = c * s;
    nf.col(a) = vec16(m4);
  }
  for (int l = 0; l < 3; ++l) {
    Matrix m4 = Matrix::Zero(4, 4);
    m4.topLeftCorner(3, 3) = c.col(l) * Eigen::RowVector3d::Unit(l);
    nf.col(3 + l) = vec16(m4);
  }
  for (int mu = 0; mu < 4; ++mu) nf(r16(3, mu), 6 + mu) = 1.0;
  return nf;
}

}  // namespace charts

// ===================================================================== built-ins

inline FramedChart euclidean(int n) {
  if (n < 1) throw std::invalid_argument("euclidean: n must be >= 1");
  FramedChart M;
  M.name = "euclidean(" + std::to_string(n) + ")";
  M.n = M.m = n;
  M.frame = [](const Vector& x) -> Matrix { return charts::euclidean_frame<double>(x); };
  M.domain_violation = [](const Vector&) -> std::optional<std::string> { return std::nullopt; };
  M.retraction = [](const Vector& x) { return x; };
  M.christoffel_closed_form = [n](const Vector&) { return ChristoffelTensor(n, n); };
  M.frame_jet = [](const JetVector& x) -> JetMatrix { return charts::euclidean_frame<Jet>(x); };
  M.christoffel_jet = [n](const JetVector&) { return ConnectionCoefficients<Jet>(n, n); };
  AmbientData amb;
  amb.N = n;
  amb.nu = 0;
  amb.embedding = [](const Vector& x) { return x; };
  amb.frame = [n](const Vector&) -> Matrix { return Matrix::Identity(n, n); };
  amb.normal_frame = [n](const Vector&) -> Matrix { return Matrix::Zero(n, 0); };
  M.ambient = amb;
  M.base_point = Vector::Zero(n);
  M.sample = [n](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = u(rng);
    return x;
  };
  return M;
}

inline FramedChart sphere(int n, int pole_sign = +1) {
  if (n < 1) throw std::invalid_argument("sphere: n must be >= 1");
  if (pole_sign != 1 && pole_sign != -1) throw std::invalid_argument("sphere: pole_sign must be +-1");
  FramedChart M;
  M.name = std::string("sphere(") + std::to_string(n) + (pole_sign > 0 ? ",+)" : ",-)");
  M.n = n;
  M.m = n + 1;
  M.frame = [pole_sign](const Vector& x) -> Matrix {
    return charts::sphere_frame<double>(x, pole_sign);
  };
  M.domain_violation = [n, pole_sign](const Vector& x) -> std::optional<std::string> {
    if (std::abs(x.norm() - 1.0) > kDomainTolerance) return "point is off the unit sphere";
    if (pole_sign * x[n] <= 0.0) return "x_n has the wrong sign for this chart";
    if (x[n] * x[n] <= 1e-20) return "s_n <= eps";
    return std::nullopt;
  };
  M.retraction = [](const Vector& x) -> Vector { return x / x.norm(); };
  M.christoffel_closed_form = [pole_sign](const Vector& x) {
    return charts::sphere_christoffel<double>(x, pole_sign);
  };
  M.frame_jet = [pole_sign](const JetVector& x) -> JetMatrix {
    return charts::sphere_frame<Jet>(x, pole_sign);
  };
  M.christoffel_jet = [pole_sign](const JetVector& x) {
    return charts::sphere_christoffel<Jet>(x, pole_sign);
  };
  AmbientData amb;
  amb.N = n + 1;
  amb.nu = 1;
  amb.embedding = [](const Vector& x) { return x; };
  amb.frame = M.frame;
  amb.normal_frame = [](const Vector& x) -> Matrix { return x / x.norm(); };
  M.ambient = amb;
  M.base_point = Vector::Zero(n + 1);
  M.base_point[n] = pole_sign;
  M.sample = [n, pole_sign](std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    for (;;) {
      Vector x(n + 1);
      for (int i = 0; i <= n; ++i) x[i] = g(rng);
      x /= x.norm();
      x[n] = pole_sign * std::abs(x[n]);
      if (std::abs(x[n]) > 0.2) return x;
    }
  };
  return M;
}

inline FramedChart se3() {
  FramedChart M;
  M.name = "se3";
  M.n = 6;
  M.m = 12;
  M.frame = [](const Vector& x) -> Matrix { return charts::se3_frame<double>(x); };
  M.domain_violation = [](const Vector& x) -> std::optional<std::string> {
    const Matrix c = charts::se3_rotation_block<double>(x);
    if (orthogonality_defect(c) > kDomainTolerance) return "rotation block is not orthogonal";
    if (c.determinant() <= 0.0) return "rotation block has det <= 0";
    return std::nullopt;
  };
  M.retraction = [](const Vector& x) -> Vector {
    Vector y = x;
    const Matrix c = project_to_so(charts::se3_rotation_block<double>(x));
    for (int r = 0; r < 3; ++r)
      for (int q = 0; q < 3; ++q) y[3 * r + q] = c(r, q);
    return y;
  };
  M.christoffel_closed_form = [](const Vector&) { return charts::se3_christoffel<double>(); };
  M.frame_jet = [](const JetVector& x) -> JetMatrix { return charts::se3_frame<Jet>(x); };
  M.christoffel_jet = [](const JetVector&) { return charts::se3_christoffel<Jet>(); };
  AmbientData amb;
  amb.N = 16;
  amb.nu = 10;
  amb.embedding = [](const Vector& x) -> Vector {
    Matrix m4 = Matrix::Zero(4, 4);
    m4.topLeftCorner(3, 3) = charts::se3_rotation_block<double>(x);
    m4.block(0, 3, 3, 1) = x.segment(9, 3);
    m4(3, 3) = 1.0;
    return charts::vec16(m4);
  };
  amb.frame = [](const Vector& x) -> Matrix {
    const Matrix c = charts::se3_rotation_block<double>(x);
    Matrix f = Matrix::Zero(16, 6);
    for (int a = 0; a < 3; ++a) {
      Matrix m4 = Matrix::Zero(4, 4);
      m4.topLeftCorner(3, 3) = c * charts::se3_generator(a);
      f.col(a) = charts::vec16(m4);
    }
    for (int k = 0; k < 3; ++k)
      for (int r = 0; r < 3; ++r) f(charts::r16(r, 3), 3 + k) = c(r, k);
    return f;
  };
  amb.normal_frame = [](const Vector& x) -> Matrix {
    return charts::se3_normal_frame_16(charts::se3_rotation_block<double>(x));
  };
  M.ambient = amb;
  M.base_point = Vector::Zero(12);
  M.base_point[0] = M.base_point[4] = M.base_point[8] = 1.0;
  M.sample = [](std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vector w(3);
    for (int i = 0; i < 3; ++i) w[i] = g(rng);
    Matrix k(3, 3);
    k << 0, -w[2], w[1], w[2], 0, -w[0], -w[1], w[0], 0;
    const Matrix c = exp_skew(k);
    Vector x(12);
    for (int r = 0; r < 3; ++r)
      for (int q = 0; q < 3; ++q) x[3 * r + q] = c(r, q);
    for (int i = 0; i < 3; ++i) x[9 + i] = g(rng);
    return x;
  };
  return M;
}

/// se(3) with its induced metric, identified with R^6, imbedded in R^16 as
/// x -> [[K(x), (x4,x5,x6)^T], [0, 0]] with K(x) skew.
inline FramedChart se3_flat() {
  FramedChart M = euclidean(6);
  M.name = "se3_flat";
  const double s = 1.0 / std::sqrt(2.0);
  AmbientData amb;
  amb.N = 16;
  amb.nu = 10;
  amb.embedding = [s](const Vector& x) -> Vector {
    Matrix m4 = Matrix::Zero(4, 4);
    m4(0, 1) = x[0] * s;
    m4(0, 2) = x[1] * s;
    m4(1, 2) = x[2] * s;
    m4(1, 0) = -m4(0, 1);
    m4(2, 0) = -m4(0, 2);
    m4(2, 1) = -m4(1, 2);
    m4(0, 3) = x[3];
    m4(1, 3) = x[4];
    m4(2, 3) = x[5];
    return charts::vec16(m4);
  };
  amb.frame = [](const Vector&) -> Matrix {
    Matrix f = Matrix::Zero(16, 6);
    for (int a = 0; a < 3; ++a) {
      Matrix m4 = Matrix::Zero(4, 4);
      m4.topLeftCorner(3, 3) = charts::se3_generator(a);
      f.col(a) = charts::vec16(m4);
    }
    for (int k = 0; k < 3; ++k) f(charts::r16(k, 3), 3 + k) = 1.0;
    return f;
  };
  amb.normal_frame = [](const Vector&) -> Matrix {
    return charts::se3_normal_frame_16(Matrix::Identity(3, 3));
  };
  M.ambient = amb;
  return M;
}

/// Unit circle in R^2 (frame e_1 = (-x_2, x_1)), imbedded in R^N (N = 2 or 3) as
/// (cos p, sin p) -> (sin p, 1 - cos p[, 0]).
inline FramedChart circle(int N = 3) {
  if (N != 2 && N != 3) throw std::invalid_argument("circle: ambient dimension must be 2 or 3");
  FramedChart M;
  M.name = "circle(R" + std::to_string(N) + ")";
  M.n = 1;
  M.m = 2;
  M.frame = [](const Vector& x) -> Matrix { return Eigen::Vector2d(-x[1], x[0]); };
  M.domain_violation = [](const Vector& x) -> std::optional<std::string> {
    if (std::abs(x.norm() - 1.0) > kDomainTolerance) return "point is off the unit circle";
    return std::nullopt;
  };
  M.retraction = [](const Vector& x) -> Vector { return x / x.norm(); };
  M.christoffel_closed_form = [](const Vector&) { return ChristoffelTensor(1, 1); };
  M.frame_jet = [](const JetVector& x) -> JetMatrix {
    JetMatrix e(2, 1);
    e(0, 0) = -x[1];
    e(1, 0) = x[0];
    return e;
  };
  M.christoffel_jet = [](const JetVector&) { return ConnectionCoefficients<Jet>(1, 1); };
  AmbientData amb;
  amb.N = N;
  amb.nu = N - 1;
  amb.embedding = [N](const Vector& x) -> Vector {
    Vector y = Vector::Zero(N);
    y[0] = x[1];
    y[1] = 1.0 - x[0];
    return y;
  };
  amb.frame = [N](const Vector& x) -> Matrix {
    Matrix f = Matrix::Zero(N, 1);
    f(0, 0) = x[0];
    f(1, 0) = x[1];
    return f;
  };
  amb.normal_frame = [N](const Vector& x) -> Matrix {
    Matrix f = Matrix::Zero(N, N - 1);
    f(0, 0) = -x[1];
    f(1, 0) = x[0];
    if (N == 3) f(2, 1) = 1.0;
    return f;
  };
  M.ambient = amb;
  M.base_point = Eigen::Vector2d(1.0, 0.0);
  M.sample = [](std::mt19937_64& rng) -> Vector {
    std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
    const double p = u(rng);
    return Eigen::Vector2d(std::cos(p), std::sin(p));
  };
  return M;
}

/// R^1 imbedded in R^N as the first coordinate axis.
inline FramedChart line(int N = 3) {
  if (N < 2) throw std::invalid_argument("line: ambient dimension must be >= 2");
  FramedChart M = euclidean(1);
  M.name = "line(R" + std::to_string(N) + ")";
  AmbientData amb;
  amb.N = N;
  amb.nu = N - 1;
  amb.embedding = [N](const Vector& x) -> Vector {
    Vector y = Vector::Zero(N);
    y[0] = x[0];
    return y;
  };
  amb.frame = [N](const Vector&) -> Matrix { return Matrix::Identity(N, 1); };
  amb.normal_frame = [N](const Vector&) -> Matrix { return Matrix::Identity(N, N).rightCols(N - 1); };
  M.ambient = amb;
  return M;
}

/// R^1 imbedded in R^3 as the unit-speed helix (cos s, sin s, s) / sqrt 2.
inline FramedChart spiral() {
  FramedChart M = euclidean(1);
  M.name = "spiral";
  const double r = 1.0 / std::sqrt(2.0);
  AmbientData amb;
  amb.N = 3;
  amb.nu = 2;
  amb.embedding = [r](const Vector& x) -> Vector {
    return Eigen::Vector3d(std::cos(x[0]), std::sin(x[0]), x[0]) * r;
  };
  amb.frame = [r](const Vector& x) -> Matrix {
    return Eigen::Vector3d(-std::sin(x[0]), std::cos(x[0]), 1.0) * r;
  };
  amb.normal_frame = [r](const Vector& x) -> Matrix {
    Matrix f(3, 2);
    f.col(0) = Eigen::Vector3d(-std::sin(x[0]), std::cos(x[0]), -1.0) * r;
    f.col(1) = Eigen::Vector3d(-std::cos(x[0]), -std::sin(x[0]), 0.0);
    return f;
  };
  M.ambient = amb;
  return M;
}

/// Max |<e_i, e_j> - delta_ij|, using the ambient frame when the chart has one.
inline double orthonormality_residual(const FramedChart& M, const Vector& x) {
  M.require_domain(x);
  Matrix f = M.frame(x);
  if (M.ambient) {
    const Matrix t = M.ambient->frame(x);
    const Matrix nf = M.ambient->normal_frame(x);
    f.resize(t.rows(), t.cols() + nf.cols());
    f << t, nf;
  }
  return (f.transpose() * f - Matrix::Identity(f.cols(), f.cols())).cwiseAbs().maxCoeff();
}

}  // namespace rollkit
