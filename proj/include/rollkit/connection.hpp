#pragma once

#include "rollkit/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace rollkit {

struct NumericDiffOptions {
  bool richardson = false;
  double step = 0.0;  // 0: cbrt(eps) * (1 + |x|)
};

inline double default_fd_step(const Vector& x) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + x.norm());
}

namespace detail {

// d/ds F(R(x + s d)) at s = 0 by central differences.
inline Matrix directional_derivative(const FramedChart& M,
                                     const std::function<Matrix(const Vector&)>& F,
                                     const Vector& x, const Vector& d,
                                     const NumericDiffOptions& opt) {
  const double h = opt.step > 0.0 ? opt.step : default_fd_step(x);
  auto central = [&](double step) -> Matrix {
    const Vector xp = M.retraction(x + step * d);
    const Vector xm = M.retraction(x - step * d);
    return (F(xp) - F(xm)) / (2.0 * step);
  };
  if (!opt.richardson) return central(h);
  return (4.0 * central(h / 2.0) - central(h)) / 3.0;
}

inline const AmbientData& require_ambient(const FramedChart& M) {
  if (!M.ambient) throw std::invalid_argument(M.name + ": chart has no ambient data");
  return *M.ambient;
}

}  // namespace detail

/// Gamma[k][j][i] = <D_{e_k} iota_* e_j, iota_* e_i> from the ambient frame.
inline ChristoffelTensor christoffel_numeric(const FramedChart& M, const Vector& x,
                                             const NumericDiffOptions& opt = {}) {
  const AmbientData& amb = detail::require_ambient(M);
  M.require_domain(x);
  const Matrix e = M.frame(x);
  const Matrix f = amb.frame(x);
  ChristoffelTensor g(M.n, M.n);
  for (int k = 0; k < M.n; ++k) {
    const Matrix df = detail::directional_derivative(M, amb.frame, x, e.col(k), opt);
    const Matrix c = df.transpose() * f;  // c(j, i) = <d f_j, f_i>
    for (int j = 0; j < M.n; ++j)
      for (int i = 0; i < M.n; ++i) g(k, j, i) = c(j, i);
  }
  return g;
}

inline ChristoffelTensor christoffel(const FramedChart& M, const Vector& x) {
  if (M.christoffel_closed_form) {
    M.require_domain(x);
    return M.christoffel_closed_form(x);
  }
  return christoffel_numeric(M, x);
}

/// Gamma_perp[k][lambda][kappa] = <D_{e_k} eps_lambda, eps_kappa>.
inline NormalChristoffel normal_christoffel(const FramedChart& M, const Vector& x,
                                            const NumericDiffOptions& opt = {}) {
  const AmbientData& amb = detail::require_ambient(M);
  M.require_domain(x);
  const Matrix e = M.frame(x);
  const Matrix nf = amb.normal_frame(x);
  NormalChristoffel g(M.n, amb.nu);
  for (int k = 0; k < M.n; ++k) {
    const Matrix dn = detail::directional_derivative(M, amb.normal_frame, x, e.col(k), opt);
    const Matrix c = dn.transpose() * nf;
    for (int a = 0; a < amb.nu; ++a)
      for (int b = 0; b < amb.nu; ++b) g(k, a, b) = c(a, b);
  }
  return g;
}

/// Coordinates of a representation-space velocity in the frame {e_k}.
inline Vector frame_coordinates(const FramedChart& M, const Vector& x, const Vector& xdot) {
  return M.frame(x).transpose() * xdot;
}

// ===================================================================== curves

struct CurvePoint {
  Vector x;
  Vector xdot;
};

/// A piecewise-smooth curve in representation coordinates.  Sampled curves are
/// cubic Hermite interpolants; a kink is encoded by repeating a node time with the
/// left and right velocities.
class Curve {
 public:
  static Curve from_function(double t0, double t1, std::function<CurvePoint(double)> f) {
    if (!(t1 > t0)) throw std::invalid_argument("Curve: empty time interval");
    Curve c;
    c.t0_ = t0;
    c.t1_ = t1;
    c.fn_ = std::move(f);
    return c;
  }

  static Curve from_samples(std::vector<double> t, std::vector<Vector> x, std::vector<Vector> v) {
    if (t.size() < 2 || x.size() != t.size() || v.size() != t.size())
      throw std::invalid_argument("Curve: need >= 2 samples with positions and velocities");
    for (std::size_t i = 1; i < t.size(); ++i)
      if (t[i] < t[i - 1]) throw std::invalid_argument("Curve: sample times decrease");
    Curve c;
    c.t0_ = t.front();
    c.t1_ = t.back();
    if (!(c.t1_ > c.t0_)) throw std::invalid_argument("Curve: empty time interval");
    c.t_ = std::move(t);
    c.x_ = std::move(x);
    c.v_ = std::move(v);
    return c;
  }

  /// Velocities by five-point finite differences on each smooth piece; pieces are
  /// separated at the given breakpoint times, which must be sample times.
  static Curve from_samples_fd(const std::vector<double>& t, const std::vector<Vector>& x,
                               const std::vector<double>& breakpoints = {});

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  bool sampled() const { return !t_.empty(); }
  const std::vector<double>& nodes() const { return t_; }

  CurvePoint at(double t) const {
    if (fn_) return fn_(t);
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - t_.begin(), 1)) - 1;
    while (i + 1 < t_.size() && t_[i + 1] == t_[i]) ++i;
    if (i + 1 >= t_.size()) i = t_.size() - 2;
    while (i > 0 && t_[i + 1] == t_[i]) --i;
    return segment(i, t);
  }

  /// Point on segment [t_i, t_{i+1}], using that segment's end velocities.
  CurvePoint segment(std::size_t i, double t) const {
    const double h = t_[i + 1] - t_[i];
    if (h <= 0.0) return {x_[i], v_[i]};
    const double s = (t - t_[i]) / h;
    const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
    const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
    const double d00 = (6 * s * s - 6 * s) / h, d10 = 3 * s * s - 4 * s + 1;
    const double d01 = (-6 * s * s + 6 * s) / h, d11 = 3 * s * s - 2 * s;
    CurvePoint p;
    p.x = h00 * x_[i] + h10 * h * v_[i] + h01 * x_[i + 1] + h11 * h * v_[i + 1];
    p.xdot = d00 * x_[i] + d10 * v_[i] + d01 * x_[i + 1] + d11 * v_[i + 1];
    return p;
  }

 private:
  double t0_ = 0.0;
  double t1_ = 0.0;
  std::function<CurvePoint(double)> fn_;
  std::vector<double> t_;
  std::vector<Vector> x_;
  std::vector<Vector> v_;
};

namespace detail {

// Weights w with f'(z) ~ sum w_j f(z_j) (derivative of the Lagrange interpolant).
inline std::vector<double> derivative_weights(const std::vector<double>& z, double at) {
  const std::size_t m = z.size();
  std::vector<double> w(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double denom = 1.0;
    for (std::size_t l = 0; l < m; ++l)
      if (l != j) denom *= z[j] - z[l];
    double num = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k == j) continue;
      double prod = 1.0;
      for (std::size_t l = 0; l < m; ++l)
        if (l != j && l != k) prod *= at - z[l];
      num += prod;
    }
    w[j] = num / denom;
  }
  return w;
}

// Five-point (or fewer) derivative estimates on one smooth piece [lo, hi].
inline std::vector<Vector> piece_velocities(const std::vector<double>& t,
                                            const std::vector<Vector>& x, std::size_t lo,
                                            std::size_t hi) {
  const std::size_t count = hi - lo + 1;
  const std::size_t width = std::min<std::size_t>(5, count);
  std::vector<Vector> v;
  for (std::size_t i = lo; i <= hi; ++i) {
    std::size_t start = i >= lo + width / 2 ? i - width / 2 : lo;
    if (start + width > hi + 1) start = hi + 1 - width;
    std::vector<double> z(t.begin() + static_cast<std::ptrdiff_t>(start),
                          t.begin() + static_cast<std::ptrdiff_t>(start + width));
    const auto w = derivative_weights(z, t[i]);
    Vector d = Vector::Zero(x[i].size());
    for (std::size_t j = 0; j < width; ++j) d += w[j] * x[start + j];
    v.push_back(d);
  }
  return v;
}

}  // namespace detail

inline Curve Curve::from_samples_fd(const std::vector<double>& t, const std::vector<Vector>& x,
                                    const std::vector<double>& breakpoints) {
  if (t.size() < 2 || x.size() != t.size())
    throw std::invalid_argument("Curve: need >= 2 samples");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("Curve: degenerate sample grid");
  std::vector<std::size_t> cuts{0};
  for (std::size_t i = 1; i + 1 < t.size(); ++i)
    for (double b : breakpoints)
      if (t[i] == b) cuts.push_back(i);
  cuts.push_back(t.size() - 1);
  std::vector<double> tt;
  std::vector<Vector> xx, vv;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const auto v = detail::piece_velocities(t, x, cuts[p], cuts[p + 1]);
    for (std::size_t i = cuts[p]; i <= cuts[p + 1]; ++i) {
      tt.push_back(t[i]);
      xx.push_back(x[i]);
      vv.push_back(v[i - cuts[p]]);
    }
  }
  return from_samples(std::move(tt), std::move(xx), std::move(vv));
}

// ===================================================================== transport

/// Coefficients of transported vectors (columns of z) in the chart frame.
struct CoefficientPath {
  std::vector<double> t;
  std::vector<Matrix> z;
};

namespace detail {

// Generator G with zdot = G z at curve time t, for coefficients c[k][a][b].
template <class Coefficients>
Matrix transport_generator(const FramedChart& M, const Curve& curve, double t,
                           const CurvePoint* p_override, Coefficients&& coefficients) {
  const CurvePoint p = p_override ? *p_override : curve.at(t);
  const Vector x = M.retraction(p.x);
  M.require_domain(x);
  const Vector u = frame_coordinates(M, x, p.xdot);
  const ConnectionCoefficients<double> c = coefficients(x);
  Matrix g = Matrix::Zero(c.fibre(), c.fibre());
  for (int k = 0; k < M.n; ++k) g -= u[k] * c.slice(k).transpose();
  return g;
}

template <class Coefficients>
CoefficientPath transport(const FramedChart& M, const Curve& curve, const Matrix& z0, double dt,
                          Coefficients&& coefficients) {
  if (!(dt > 0.0)) throw std::invalid_argument("transport: dt must be positive");
  CoefficientPath out;
  Matrix z = z0;
  auto rk4 = [&](double t, double h, const std::function<Matrix(double)>& gen) {
    const Matrix g1 = gen(t), g2 = gen(t + h / 2), g4 = gen(t + h);
    const Matrix k1 = g1 * z;
    const Matrix k2 = g2 * (z + h / 2 * k1);
    const Matrix k3 = g2 * (z + h / 2 * k2);
    const Matrix k4 = g4 * (z + h * k3);
    z += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  };
  if (curve.sampled()) {
    const auto& nodes = curve.nodes();
    out.t.push_back(nodes.front());
    out.z.push_back(z);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      const double a = nodes[i], b = nodes[i + 1];
      if (b <= a) continue;
      const int steps = std::max(1, static_cast<int>(std::ceil((b - a) / dt - 1e-9)));
      const double h = (b - a) / steps;
      auto gen = [&](double t) {
        const CurvePoint p = curve.segment(i, t);
        return transport_generator(M, curve, t, &p, coefficients);
      };
      for (int s = 0; s < steps; ++s) rk4(a + s * h, h, gen);
      out.t.push_back(b);
      out.z.push_back(z);
    }
    return out;
  }
  const int steps = std::max(1, static_cast<int>(std::ceil((curve.t1() - curve.t0()) / dt - 1e-9)));
  const double h = (curve.t1() - curve.t0()) / steps;
  auto gen = [&](double t) { return transport_generator(M, curve, t, nullptr, coefficients); };
  out.t.push_back(curve.t0());
  out.z.push_back(z);
  for (int s = 0; s < steps; ++s) {
    rk4(curve.t0() + s * h, h, gen);
    out.t.push_back(curve.t0() + (s + 1) * h);
    out.z.push_back(z);
  }
  return out;
}

}  // namespace detail

/// Solves zdot_i = -sum_{k,j} u_k Gamma[k][j][i] z_j for each column of z0.
inline CoefficientPath parallel_transport(const FramedChart& M, const Curve& curve,
                                          const Matrix& z0, double dt = 1e-3) {
  if (z0.rows() != M.n) throw std::invalid_argument("parallel_transport: wrong coefficient size");
  return detail::transport(M, curve, z0, dt, [&M](const Vector& x) { return christoffel(M, x); });
}

inline CoefficientPath normal_parallel_transport(const FramedChart& M, const Curve& curve,
                                                 const Matrix& w0, double dt = 1e-3) {
  const AmbientData& amb = detail::require_ambient(M);
  if (w0.rows() != amb.nu)
    throw std::invalid_argument("normal_parallel_transport: wrong coefficient size");
  return detail::transport(M, curve, w0, dt,
                           [&M](const Vector& x) { return normal_christoffel(M, x); });
}

// ===================================================================== geodesics

struct GeodesicPath {
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<Vector> u;  // velocity in frame coordinates
};

inline GeodesicPath geodesic(const FramedChart& M, const Vector& x0, const Vector& v0, double T,
                             double dt = 1e-3) {
  M.require_domain(x0);
  if (v0.size() != M.n) throw std::invalid_argument("geodesic: wrong velocity size");
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("geodesic: T and dt must be positive");
  auto rhs = [&M](const Vector& x, const Vector& u, Vector& dx, Vector& du) {
    const Matrix e = M.frame(x);
    const ChristoffelTensor g = M.christoffel_closed_form ? M.christoffel_closed_form(x)
                                                          : christoffel_numeric(M, M.retraction(x));
    dx = e * u;
    du = Vector::Zero(M.n);
    for (int k = 0; k < M.n; ++k) du -= u[k] * g.slice(k).transpose() * u;
  };
  GeodesicPath out;
  Vector x = x0, u = v0;
  const int steps = std::max(1, static_cast<int>(std::ceil(T / dt - 1e-9)));
  const double h = T / steps;
  out.t.push_back(0.0);
  out.x.push_back(x);
  out.u.push_back(u);
  for (int s = 0; s < steps; ++s) {
    Vector k1x, k1u, k2x, k2u, k3x, k3u, k4x, k4u;
    rhs(x, u, k1x, k1u);
    rhs(x + h / 2 * k1x, u + h / 2 * k1u, k2x, k2u);
    rhs(x + h / 2 * k2x, u + h / 2 * k2u, k3x, k3u);
    rhs(x + h * k3x, u + h * k3u, k4x, k4u);
    x = M.retraction(x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x));
    u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
    M.require_domain(x);
    out.t.push_back((s + 1) * h);
    out.x.push_back(x);
    out.u.push_back(u);
  }
  return out;
}

/// Max over interior nodes of |du/dt + sum Gamma u u| for a sampled curve.
inline double geodesic_residual(const FramedChart& M, const std::vector<double>& t,
                                const std::vector<Vector>& x) {
  const Curve c = Curve::from_samples_fd(t, x);
  std::vector<Vector> u;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const CurvePoint p = c.at(t[i]);
    u.push_back(frame_coordinates(M, x[i], p.xdot));
  }
  const Curve uc = Curve::from_samples_fd(t, u);
  double worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const ChristoffelTensor g = christoffel(M, x[i]);
    Vector r = uc.at(t[i]).xdot;
    for (int k = 0; k < M.n; ++k) r += u[i][k] * g.slice(k).transpose() * u[i];
    worst = std::max(worst, r.norm());
  }
  return worst;
}

/// (c1, c2) with [e1, e2] = c1 e1 + c2 e2, from Gamma.
inline std::pair<double, double> structural_constants_2d(const FramedChart& M, const Vector& x) {
  if (M.n != 2) throw std::invalid_argument("structural_constants_2d: n must be 2");
  const ChristoffelTensor g = christoffel(M, x);
  // [e1,e2] = nabla_{e1} e2 - nabla_{e2} e1
  const double c1 = g(0, 1, 0) - g(1, 0, 0);
  const double c2 = g(0, 1, 1) - g(1, 0, 1);
  return {c1, c2};
}

/// Gaussian curvature <R(e1,e2)e2, e1> of a surface from Gamma and its derivatives.
inline double gaussian_curvature(const FramedChart& M, const Vector& x) {
  if (M.n != 2) throw std::invalid_argument("gaussian_curvature: n must be 2");
  M.require_domain(x);
  const Matrix e = M.frame(x);
  auto derivative = [&](int k, int a, int b, int c) {
    const double h = 1e-4 * (1.0 + x.norm());
    const Vector xp = M.retraction(x + h * e.col(k));
    const Vector xm = M.retraction(x - h * e.col(k));
    return (christoffel(M, xp)(a, b, c) - christoffel(M, xm)(a, b, c)) / (2 * h);
  };
  const ChristoffelTensor g = christoffel(M, x);
  const double w1 = g(0, 1, 0), w2 = g(1, 1, 0);  // <nabla_{e_k} e2, e1>
  return derivative(0, 1, 1, 0) - derivative(1, 0, 1, 0) - w1 * w1 - w2 * w2;
}

}  // namespace rollkit
