#pragma once

// Rolling of a manifold M on a manifold M_hat without slipping or twisting.
//
// Index convention: A(i, k) = <q e_k, e_hat_i>, so q e_k = sum_i A(i, k) e_hat_i.
// Likewise B(kappa, lambda) = <eps_hat_kappa, p eps_lambda> for the normal part.
// Controls u are the coordinates of xdot in the frame {e_k}.

#include "rollkit/connection.hpp"
#include "rollkit/vector_field.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace rollkit {

struct ManifoldPair {
  FramedChart M;
  FramedChart M_hat;

  ManifoldPair(FramedChart m, FramedChart m_hat) : M(std::move(m)), M_hat(std::move(m_hat)) {
    if (M.n != M_hat.n)
      throw std::invalid_argument("ManifoldPair: intrinsic dimensions differ (" +
                                  std::to_string(M.n) + " vs " + std::to_string(M_hat.n) + ")");
  }
  int n() const { return M.n; }
  int nu() const {
    if (!M.ambient || !M_hat.ambient) return -1;
    return M.ambient->nu == M_hat.ambient->nu ? M.ambient->nu : -1;
  }
};

/// A point of Q, optionally extended by B to a point of Q + P.
struct ConfigPoint {
  Vector x;
  Vector x_hat;
  Matrix A;
  std::optional<Matrix> B;

  bool extended() const { return B.has_value(); }
};

inline int config_dim(const ManifoldPair& pair, bool extended) {
  const int n = pair.n();
  int d = n * (n + 3) / 2;
  if (extended) {
    const int nu = pair.nu();
    if (nu < 0) throw std::invalid_argument("config_dim: extended space needs matching ambient data");
    d += nu * (nu - 1) / 2;
  }
  return d;
}

inline void require_valid(const ManifoldPair& pair, const ConfigPoint& q) {
  pair.M.require_domain(q.x);
  pair.M_hat.require_domain(q.x_hat);
  const int n = pair.n();
  if (q.A.rows() != n || q.A.cols() != n) throw std::invalid_argument("ConfigPoint: A has wrong shape");
  if (orthogonality_defect(q.A) > 1e-9 || q.A.determinant() <= 0.0)
    throw std::invalid_argument("ConfigPoint: A is not in SO(n)");
  if (q.B) {
    const int nu = pair.nu();
    if (nu < 0) throw std::invalid_argument("ConfigPoint: B given but ambient data missing");
    if (q.B->rows() != nu || q.B->cols() != nu) throw std::invalid_argument("ConfigPoint: B has wrong shape");
    if (nu > 0 && (orthogonality_defect(*q.B) > 1e-9 || q.B->determinant() <= 0.0))
      throw std::invalid_argument("ConfigPoint: B is not in SO(nu)");
  }
}

// ===================================================================== layout

/// Offsets of the blocks (x, x_hat, A row-major, B row-major) in a packed state.
struct StateLayout {
  int m = 0, mh = 0, n = 0, nu = 0;
  bool extended = false;

  StateLayout(const ManifoldPair& pair, bool ext)
      : m(pair.M.m), mh(pair.M_hat.m), n(pair.n()), nu(ext ? pair.nu() : 0), extended(ext) {
    if (ext && pair.nu() < 0) throw std::invalid_argument("extended state needs matching ambient data");
  }
  int x() const { return 0; }
  int x_hat() const { return m; }
  int a() const { return m + mh; }
  int b() const { return m + mh + n * n; }
  int size() const { return b() + (extended ? nu * nu : 0); }
};

inline Vector pack_state(const ManifoldPair& pair, const ConfigPoint& q) {
  const StateLayout L(pair, q.extended());
  Vector p(L.size());
  p.segment(L.x(), L.m) = q.x;
  p.segment(L.x_hat(), L.mh) = q.x_hat;
  p.segment(L.a(), L.n * L.n) = flatten_row_major(q.A);
  if (q.B) p.segment(L.b(), L.nu * L.nu) = flatten_row_major(*q.B);
  return p;
}

inline ConfigPoint unpack_state(const ManifoldPair& pair, const Vector& p, bool extended) {
  const StateLayout L(pair, extended);
  if (p.size() != L.size()) throw std::invalid_argument("unpack_state: wrong state size");
  ConfigPoint q;
  q.x = p.segment(L.x(), L.m);
  q.x_hat = p.segment(L.x_hat(), L.mh);
  q.A = unflatten_row_major(p.segment(L.a(), L.n * L.n), L.n, L.n);
  if (extended) q.B = unflatten_row_major(p.segment(L.b(), L.nu * L.nu), L.nu, L.nu);
  return q;
}

// ===================================================================== coefficients

namespace detail {

template <class S>
MatT<S> block_row_major(const VecT<S>& p, int offset, int rows) {
  MatT<S> a(rows, rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < rows; ++j) a(i, j) = p[offset + i * rows + j];
  return a;
}

// Omega(i, j) = c[k][j][i] - sum_{r,l,m} a_rk a_lj a_mi c_hat[r][l][m], and its
// normal analogue with (A, B) in place of (A, A).
template <class S>
MatT<S> twist_generator(int k, const MatT<S>& a, const MatT<S>& frame_map,
                        const ConnectionCoefficients<S>& c, const ConnectionCoefficients<S>& c_hat) {
  const int p = c.fibre();
  MatT<S> h = MatT<S>::Constant(p, p, S(0.0));
  for (int r = 0; r < c_hat.directions(); ++r) h += a(r, k) * c_hat.slice(r);
  const MatT<S> t = frame_map.transpose() * h * frame_map;
  return c.slice(k).transpose() - t.transpose();
}

inline ChristoffelTensor christoffel_near(const FramedChart& M, const Vector& x) {
  if (M.christoffel_closed_form) return M.christoffel_closed_form(x);
  return christoffel_numeric(M, M.retraction(x));
}

/// Frames and connection coefficients of both factors at one packed state.
template <class S>
struct RollingGeometry {
  MatT<S> E, E_hat, A, B;
  ConnectionCoefficients<S> G, G_hat, Gp, Gp_hat;
  bool extended = false;

  int n() const { return static_cast<int>(E.cols()); }

  MatT<S> omega(int k) const { return twist_generator<S>(k, A, A, G, G_hat); }
  MatT<S> omega_perp(int k) const { return twist_generator<S>(k, A, B, Gp, Gp_hat); }

  VecT<S> field(int k, const StateLayout& L) const {
    VecT<S> out(L.size());
    out.segment(L.x(), L.m) = E.col(k);
    out.segment(L.x_hat(), L.mh) = E_hat * A.col(k);
    const MatT<S> da = A * omega(k);
    for (int i = 0; i < L.n; ++i)
      for (int j = 0; j < L.n; ++j) out[L.a() + i * L.n + j] = da(i, j);
    if (extended) {
      const MatT<S> db = B * omega_perp(k);
      for (int i = 0; i < L.nu; ++i)
        for (int j = 0; j < L.nu; ++j) out[L.b() + i * L.nu + j] = db(i, j);
    }
    return out;
  }
};

inline RollingGeometry<double> geometry_at(const ManifoldPair& pair, const StateLayout& L,
                                           const Vector& p) {
  RollingGeometry<double> g;
  const Vector x = p.segment(L.x(), L.m), xh = p.segment(L.x_hat(), L.mh);
  g.E = pair.M.frame(x);
  g.E_hat = pair.M_hat.frame(xh);
  g.A = block_row_major<double>(p, L.a(), L.n);
  g.G = christoffel_near(pair.M, x);
  g.G_hat = christoffel_near(pair.M_hat, xh);
  g.extended = L.extended;
  if (L.extended) {
    g.B = block_row_major<double>(p, L.b(), L.nu);
    g.Gp = normal_christoffel(pair.M, pair.M.retraction(x));
    g.Gp_hat = normal_christoffel(pair.M_hat, pair.M_hat.retraction(xh));
  }
  return g;
}

inline RollingGeometry<Jet> geometry_at(const ManifoldPair& pair, const StateLayout& L,
                                        const JetVector& p) {
  RollingGeometry<Jet> g;
  const JetVector x = p.segment(L.x(), L.m), xh = p.segment(L.x_hat(), L.mh);
  g.E = pair.M.frame_jet(x);
  g.E_hat = pair.M_hat.frame_jet(xh);
  g.A = block_row_major<Jet>(p, L.a(), L.n);
  g.G = pair.M.christoffel_jet(x);
  g.G_hat = pair.M_hat.christoffel_jet(xh);
  return g;
}

}  // namespace detail

/// Omega^(k): A-dot = A Omega^(k) when moving with unit speed along e_k.
inline Matrix v_coefficients(const ManifoldPair& pair, const ConfigPoint& q, int k) {
  if (k < 0 || k >= pair.n()) throw std::invalid_argument("v_coefficients: control index out of range");
  require_valid(pair, q);
  ConfigPoint qi = q;
  qi.B.reset();
  const StateLayout L(pair, false);
  return detail::geometry_at(pair, L, pack_state(pair, qi)).omega(k);
}

/// Omega_perp^(k): B-dot = B Omega_perp^(k) when moving with unit speed along e_k.
inline Matrix vperp_coefficients(const ManifoldPair& pair, const ConfigPoint& q, int k) {
  if (k < 0 || k >= pair.n()) throw std::invalid_argument("vperp_coefficients: control index out of range");
  if (!q.B) throw std::invalid_argument("vperp_coefficients: state has no normal part");
  require_valid(pair, q);
  const StateLayout L(pair, true);
  return detail::geometry_at(pair, L, pack_state(pair, q)).omega_perp(k);
}

/// The n fields spanning the rolling distribution on Q (or Q + P when extended).
inline std::vector<VectorFieldHandle> rolling_fields(const ManifoldPair& pair, bool extended) {
  const StateLayout L(pair, extended);
  const bool exact = !extended && pair.M.has_exact_derivatives() && pair.M_hat.has_exact_derivatives();
  std::vector<VectorFieldHandle> out;
  for (int k = 0; k < pair.n(); ++k) {
    VectorFieldHandle h;
    h.label = "Z" + std::to_string(k + 1);
    h.eval = [pair, L, k](const Vector& p) -> Vector {
      return detail::geometry_at(pair, L, p).field(k, L);
    };
    if (exact) {
      h.eval_jet = [pair, L, k](const JetVector& p) -> JetVector {
        return detail::geometry_at(pair, L, p).field(k, L);
      };
    }
    out.push_back(std::move(h));
  }
  return out;
}

// ===================================================================== controls

class Control {
 public:
  static Control constant(const Vector& u) {
    Control c;
    c.value_ = [u](double, bool) { return u; };
    c.piecewise_constant_ = true;
    return c;
  }

  /// values[i] applies on [knots[i], knots[i+1]); the last one until the end.
  static Control piecewise_constant(std::vector<double> knots, std::vector<Vector> values) {
    if (knots.empty() || knots.size() != values.size())
      throw std::invalid_argument("Control: knots and values must be nonempty and of equal length");
    for (std::size_t i = 1; i < knots.size(); ++i)
      if (!(knots[i] > knots[i - 1])) throw std::invalid_argument("Control: knots must increase");
    for (const auto& v : values)
      if (v.size() != values.front().size()) throw std::invalid_argument("Control: ragged values");
    Control c;
    c.breakpoints_.assign(knots.begin() + 1, knots.end());
    c.value_ = [knots, values](double t, bool left) {
      std::size_t i = 0;
      while (i + 1 < knots.size() && (left ? t > knots[i + 1] : t >= knots[i + 1])) ++i;
      return values[i];
    };
    c.piecewise_constant_ = true;
    return c;
  }

  static Control smooth(std::function<Vector(double)> f) {
    Control c;
    c.value_ = [f = std::move(f)](double t, bool) { return f(t); };
    return c;
  }

  Vector operator()(double t, bool left_limit = false) const { return value_(t, left_limit); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  bool is_piecewise_constant() const { return piecewise_constant_; }

 private:
  std::function<Vector(double, bool)> value_;
  std::vector<double> breakpoints_;
  bool piecewise_constant_ = false;
};

struct RollingTrajectory {
  std::vector<double> t;
  std::vector<ConfigPoint> states;
  std::vector<Vector> u;  // right-continuous control at each node (left limit at the end)
  std::vector<double> breakpoints;

  bool extended() const { return !states.empty() && states.front().extended(); }
  std::size_t size() const { return t.size(); }
};

/// Raised when the trajectory leaves a chart; carries everything computed so far.
class ChartExit : public DomainError {
 public:
  ChartExit(const std::string& what, RollingTrajectory partial_traj, double time)
      : DomainError(what), partial(std::move(partial_traj)), t(time) {}
  RollingTrajectory partial;
  double t;
};

enum class Stepper { automatic, rk4, exponential };

struct IntegrateOptions {
  Stepper stepper = Stepper::automatic;
};

namespace detail {

struct Rates {
  Vector x, x_hat;
  Matrix omega, omega_perp;  // A-dot = A omega, B-dot = B omega_perp
};

inline Rates rolling_rates(const ManifoldPair& pair, const StateLayout& L, const Vector& p,
                           const Vector& u) {
  const RollingGeometry<double> g = geometry_at(pair, L, p);
  Rates r;
  r.x = g.E * u;
  r.x_hat = g.E_hat * (g.A * u);
  r.omega = Matrix::Zero(L.n, L.n);
  r.omega_perp = Matrix::Zero(L.nu, L.nu);
  for (int k = 0; k < L.n; ++k) {
    if (u[k] == 0.0) continue;
    r.omega += u[k] * g.omega(k);
    if (L.extended) r.omega_perp += u[k] * g.omega_perp(k);
  }
  return r;
}

inline Vector state_derivative(const StateLayout& L, const Vector& p, const Rates& r) {
  Vector d(L.size());
  d.segment(L.x(), L.m) = r.x;
  d.segment(L.x_hat(), L.mh) = r.x_hat;
  d.segment(L.a(), L.n * L.n) = flatten_row_major(block_row_major<double>(p, L.a(), L.n) * r.omega);
  if (L.extended)
    d.segment(L.b(), L.nu * L.nu) =
        flatten_row_major(block_row_major<double>(p, L.b(), L.nu) * r.omega_perp);
  return d;
}

}  // namespace detail

/// Integrates xdot = E u, x_hat-dot = E_hat A u, A-dot = A sum u_k Omega^(k)
/// (and B-dot = B sum u_k Omega_perp^(k)) with fixed-step RK4 and per-step
/// retraction.  The exponential stepper updates A and B by exp_skew of the RK4
/// weighted generator, which is exact whenever that generator is constant.
inline RollingTrajectory integrate_rolling(const ManifoldPair& pair, const ConfigPoint& q0,
                                           const Control& control, double T, double dt,
                                           const IntegrateOptions& opt = {}) {
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("integrate_rolling: T and dt must be positive");
  require_valid(pair, q0);
  const StateLayout L(pair, q0.extended());
  const bool exponential =
      opt.stepper == Stepper::exponential ||
      (opt.stepper == Stepper::automatic && control.is_piecewise_constant());

  std::vector<double> cuts{0.0};
  for (double b : control.breakpoints())
    if (b > 0.0 && b < T) cuts.push_back(b);
  cuts.push_back(T);

  RollingTrajectory traj;
  traj.breakpoints.assign(cuts.begin() + 1, cuts.end() - 1);
  Vector p = pack_state(pair, q0);
  auto record = [&](double t, bool last) {
    traj.t.push_back(t);
    traj.states.push_back(unpack_state(pair, p, L.extended));
    const Vector u = control(t, last);
    if (u.size() != L.n) throw std::invalid_argument("integrate_rolling: control has wrong size");
    traj.u.push_back(u);
  };
  record(0.0, false);

  for (std::size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
    const double a = cuts[piece], b = cuts[piece + 1];
    const int steps = std::max(1, static_cast<int>(std::ceil((b - a) / dt - 1e-9)));
    const double h = (b - a) / steps;
    for (int s = 0; s < steps; ++s) {
      const double t = a + s * h;
      const double t_end = (s + 1 == steps) ? b : a + (s + 1) * h;
      try {
        const Vector u0 = control(t, false), um = control(t + h / 2, false), u1 = control(t_end, true);
        const detail::Rates r1 = detail::rolling_rates(pair, L, p, u0);
        const Vector k1 = detail::state_derivative(L, p, r1);
        const Vector p2 = p + h / 2 * k1;
        const detail::Rates r2 = detail::rolling_rates(pair, L, p2, um);
        const Vector k2 = detail::state_derivative(L, p2, r2);
        const Vector p3 = p + h / 2 * k2;
        const detail::Rates r3 = detail::rolling_rates(pair, L, p3, um);
        const Vector k3 = detail::state_derivative(L, p3, r3);
        const Vector p4 = p + h * k3;
        const detail::Rates r4 = detail::rolling_rates(pair, L, p4, u1);
        const Vector k4 = detail::state_derivative(L, p4, r4);
        Vector next = p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);

        const Vector x = pair.M.retraction(next.segment(L.x(), L.m));
        const Vector xh = pair.M_hat.retraction(next.segment(L.x_hat(), L.mh));
        Matrix A, B;
        if (exponential) {
          const Matrix w = (r1.omega + 2 * r2.omega + 2 * r3.omega + r4.omega) / 6.0;
          A = detail::block_row_major<double>(p, L.a(), L.n) * exp_skew(h * (w - w.transpose()) / 2);
          if (L.extended) {
            const Matrix wp = (r1.omega_perp + 2 * r2.omega_perp + 2 * r3.omega_perp + r4.omega_perp) / 6.0;
            B = detail::block_row_major<double>(p, L.b(), L.nu) * exp_skew(h * (wp - wp.transpose()) / 2);
          }
        } else {
          A = detail::block_row_major<double>(next, L.a(), L.n);
          if (L.extended) B = detail::block_row_major<double>(next, L.b(), L.nu);
        }
        try {
          A = project_to_so(A);
          if (L.extended) B = project_to_so(B);
        } catch (const std::invalid_argument& e) {
          throw IntegrationError(std::string("integrate_rolling: ") + e.what() + " at t=" +
                                 std::to_string(t_end));
        }
        pair.M.require_domain(x);
        pair.M_hat.require_domain(xh);
        next.segment(L.x(), L.m) = x;
        next.segment(L.x_hat(), L.mh) = xh;
        next.segment(L.a(), L.n * L.n) = flatten_row_major(A);
        if (L.extended) next.segment(L.b(), L.nu * L.nu) = flatten_row_major(B);
        p = next;
      } catch (const DomainError& e) {
        throw ChartExit(std::string("chart exit: ") + e.what(), traj, t);
      }
      record(t_end, piece + 2 == cuts.size() && s + 1 == steps);
    }
  }
  return traj;
}

// ===================================================================== trajectory curves

namespace detail {

// Base curve x(t) with exact velocities E(x) u; breakpoint nodes are doubled so
// that each side carries its own one-sided velocity.
inline Curve base_curve(const ManifoldPair& pair, const RollingTrajectory& traj) {
  std::vector<double> t;
  std::vector<Vector> x, v;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Matrix e = pair.M.frame(traj.states[i].x);
    const bool kink = i > 0 && i + 1 < traj.size() &&
                      std::find(traj.breakpoints.begin(), traj.breakpoints.end(), traj.t[i]) !=
                          traj.breakpoints.end();
    if (kink) {
      t.push_back(traj.t[i]);
      x.push_back(traj.states[i].x);
      v.push_back(e * traj.u[i - 1]);
    }
    t.push_back(traj.t[i]);
    x.push_back(traj.states[i].x);
    v.push_back(e * traj.u[i]);
  }
  return Curve::from_samples(std::move(t), std::move(x), std::move(v));
}

// Contact curve x_hat(t) with velocities E_hat A u, i.e. assuming no slip.
inline Curve contact_curve_noslip(const ManifoldPair& pair, const RollingTrajectory& traj) {
  std::vector<double> t;
  std::vector<Vector> x, v;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const ConfigPoint& q = traj.states[i];
    const Matrix ea = pair.M_hat.frame(q.x_hat) * q.A;
    const bool kink = i > 0 && i + 1 < traj.size() &&
                      std::find(traj.breakpoints.begin(), traj.breakpoints.end(), traj.t[i]) !=
                          traj.breakpoints.end();
    if (kink) {
      t.push_back(traj.t[i]);
      x.push_back(q.x_hat);
      v.push_back(ea * traj.u[i - 1]);
    }
    t.push_back(traj.t[i]);
    x.push_back(q.x_hat);
    v.push_back(ea * traj.u[i]);
  }
  return Curve::from_samples(std::move(t), std::move(x), std::move(v));
}

inline std::vector<Vector> contact_points(const RollingTrajectory& traj) {
  std::vector<Vector> out;
  for (const auto& q : traj.states) out.push_back(q.x_hat);
  return out;
}

inline std::vector<Vector> base_points(const RollingTrajectory& traj) {
  std::vector<Vector> out;
  for (const auto& q : traj.states) out.push_back(q.x);
  return out;
}

// Right-sided finite-difference velocity at every node (left-sided at the end).
inline std::vector<Vector> node_velocities(const RollingTrajectory& traj,
                                           const std::vector<Vector>& x) {
  if (traj.size() < 2) throw std::invalid_argument("trajectory too short for finite differences");
  std::vector<std::size_t> cuts{0};
  for (std::size_t i = 1; i + 1 < traj.size(); ++i)
    if (std::find(traj.breakpoints.begin(), traj.breakpoints.end(), traj.t[i]) != traj.breakpoints.end())
      cuts.push_back(i);
  cuts.push_back(traj.size() - 1);
  std::vector<Vector> v(traj.size());
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const auto piece = piece_velocities(traj.t, x, cuts[c], cuts[c + 1]);
    for (std::size_t i = cuts[c]; i < cuts[c + 1]; ++i) v[i] = piece[i - cuts[c]];
    if (c + 2 == cuts.size()) v[cuts[c + 1]] = piece.back();
  }
  return v;
}

inline void require_trajectory(const RollingTrajectory& traj) {
  if (traj.size() < 2 || traj.states.size() != traj.size() || traj.u.size() != traj.size())
    throw std::invalid_argument("trajectory is empty or inconsistent");
  for (std::size_t i = 1; i < traj.size(); ++i)
    if (!(traj.t[i] > traj.t[i - 1])) throw std::invalid_argument("trajectory grid is degenerate");
}

}  // namespace detail

/// max_i |x_hat-dot - E_hat(x_hat) A u| with x_hat-dot from finite differences.
inline double noslip_residual(const ManifoldPair& pair, const RollingTrajectory& traj) {
  detail::require_trajectory(traj);
  const auto v = detail::node_velocities(traj, detail::contact_points(traj));
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const ConfigPoint& q = traj.states[i];
    worst = std::max(worst, (v[i] - pair.M_hat.frame(q.x_hat) * q.A * traj.u[i]).norm());
  }
  return worst;
}

struct FrameDrift {
  double tangential = 0.0;
  std::optional<double> normal;
  double max() const { return std::max(tangential, normal.value_or(0.0)); }
};

/// Coefficient matrices of q(t) (and p(t)) in parallel frames along x(t), x_hat(t).
struct ParallelCoefficients {
  std::vector<Matrix> A;
  std::vector<Matrix> B;
};

inline ParallelCoefficients parallel_coefficients(const ManifoldPair& pair, const RollingTrajectory& traj) {
  detail::require_trajectory(traj);
  const int n = pair.n();
  const Curve xc = detail::base_curve(pair, traj);
  const Curve xhc = Curve::from_samples_fd(traj.t, detail::contact_points(traj), traj.breakpoints);
  const CoefficientPath P = parallel_transport(pair.M, xc, Matrix::Identity(n, n));
  const CoefficientPath Ph = parallel_transport(pair.M_hat, xhc, Matrix::Identity(n, n));
  ParallelCoefficients out;
  for (std::size_t i = 0; i < traj.size(); ++i)
    out.A.push_back(Ph.z[i].transpose() * traj.states[i].A * P.z[i]);
  if (traj.extended() && pair.nu() > 0) {
    const int nu = pair.nu();
    const CoefficientPath R = normal_parallel_transport(pair.M, xc, Matrix::Identity(nu, nu));
    const CoefficientPath Rh = normal_parallel_transport(pair.M_hat, xhc, Matrix::Identity(nu, nu));
    for (std::size_t i = 0; i < traj.size(); ++i)
      out.B.push_back(Rh.z[i].transpose() * (*traj.states[i].B) * R.z[i]);
  }
  return out;
}

/// Max deviation of the parallel-frame coefficient matrices from their initial values.
inline FrameDrift frame_coefficient_drift(const ManifoldPair& pair, const RollingTrajectory& traj) {
  const ParallelCoefficients pc = parallel_coefficients(pair, traj);
  FrameDrift d;
  for (const auto& a : pc.A) d.tangential = std::max(d.tangential, (a - pc.A.front()).cwiseAbs().maxCoeff());
  if (!pc.B.empty()) {
    double w = 0.0;
    for (const auto& b : pc.B) w = std::max(w, (b - pc.B.front()).cwiseAbs().maxCoeff());
    d.normal = w;
  }
  return d;
}

/// max_i |A^T A-dot - sum u_k Omega^(k)| (and the B analogue): horizontality of
/// the sampled curve with respect to the rolling distribution.
inline double distribution_residual(const ManifoldPair& pair, const RollingTrajectory& traj) {
  detail::require_trajectory(traj);
  const StateLayout L(pair, traj.extended());
  std::vector<Vector> packed;
  for (const auto& q : traj.states) packed.push_back(pack_state(pair, q));
  const auto v = detail::node_velocities(traj, packed);
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const detail::Rates r = detail::rolling_rates(pair, L, packed[i], traj.u[i]);
    const Matrix A = traj.states[i].A;
    const Matrix dA = unflatten_row_major(v[i].segment(L.a(), L.n * L.n), L.n, L.n);
    worst = std::max(worst, (A.transpose() * dA - r.omega).cwiseAbs().maxCoeff());
    if (L.extended && L.nu > 0) {
      const Matrix B = *traj.states[i].B;
      const Matrix dB = unflatten_row_major(v[i].segment(L.b(), L.nu * L.nu), L.nu, L.nu);
      worst = std::max(worst, (B.transpose() * dB - r.omega_perp).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

/// Length of a sampled curve, composite Simpson on each smooth piece.
inline double curve_length(const std::vector<double>& t, const std::vector<Vector>& x,
                           const std::vector<double>& breakpoints = {}) {
  const Curve c = Curve::from_samples_fd(t, x, breakpoints);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double a = t[i], b = t[i + 1], h = b - a;
    std::size_t seg = 0;
    const auto& nodes = c.nodes();
    while (seg + 1 < nodes.size() && !(nodes[seg] == a && nodes[seg + 1] == b)) ++seg;
    auto speed = [&](double s) { return c.segment(seg, s).xdot.norm(); };
    total += h / 6.0 * (speed(a) + 4 * speed(a + h / 2) + speed(b));
  }
  return total;
}

/// Dimension of the space of parallel fields along x_hat that stay orthogonal to
/// its velocity wherever the velocity is nonzero.
inline int rolling_freedom(const FramedChart& M_hat, const Curve& curve, double dt = 1e-3) {
  const int n = M_hat.n;
  const CoefficientPath P = parallel_transport(M_hat, curve, Matrix::Identity(n, n), dt);
  std::vector<Vector> rows;
  for (std::size_t i = 0; i < P.t.size(); ++i) {
    const CurvePoint cp = curve.at(P.t[i]);
    const Vector x = M_hat.retraction(cp.x);
    const Vector u = frame_coordinates(M_hat, x, cp.xdot);
    if (u.norm() < 1e-12) continue;
    rows.push_back(P.z[i].transpose() * u);
  }
  if (rows.empty()) return n;
  return n - rank_of_span(rows);
}

/// Extends an intrinsic rolling by the normal isometry that is the constant B0 in
/// normal-parallel frames: B(t) = R_hat(t) B0 R(t)^T.
inline RollingTrajectory extend_to_extrinsic(const ManifoldPair& pair, const RollingTrajectory& traj,
                                             const Matrix& B0) {
  detail::require_trajectory(traj);
  const int nu = pair.nu();
  if (nu < 0) throw std::invalid_argument("extend_to_extrinsic: both charts need ambient data of equal codimension");
  if (B0.rows() != nu || B0.cols() != nu) throw std::invalid_argument("extend_to_extrinsic: B0 has wrong shape");
  if (nu > 0 && (orthogonality_defect(B0) > 1e-9 || B0.determinant() <= 0.0))
    throw std::invalid_argument("extend_to_extrinsic: B0 is not in SO(nu)");
  RollingTrajectory out = traj;
  if (nu == 0) {
    for (auto& q : out.states) q.B = Matrix(0, 0);
    return out;
  }
  const Curve xc = detail::base_curve(pair, traj);
  const Curve xhc = detail::contact_curve_noslip(pair, traj);
  const CoefficientPath R = normal_parallel_transport(pair.M, xc, Matrix::Identity(nu, nu));
  const CoefficientPath Rh = normal_parallel_transport(pair.M_hat, xhc, Matrix::Identity(nu, nu));
  for (std::size_t i = 0; i < out.size(); ++i) out.states[i].B = project_to_so(Rh.z[i] * B0 * R.z[i].transpose());
  return out;
}

struct AmbientIsometry {
  Matrix A_bar;
  Vector r_bar;
};

/// g: y -> A_bar y + r_bar with A_bar = [E_hat A, N_hat B] [E, N]^T and
/// r_bar = iota_hat(x_hat) - A_bar iota(x).
inline AmbientIsometry reconstruct_ambient_isometry(const ManifoldPair& pair, const ConfigPoint& q) {
  if (!pair.M.ambient || !pair.M_hat.ambient || pair.M.ambient->N != pair.M_hat.ambient->N)
    throw std::invalid_argument("reconstruct_ambient_isometry: ambient dimensions differ");
  const AmbientData& a = *pair.M.ambient;
  const AmbientData& ah = *pair.M_hat.ambient;
  const int nu = a.nu;
  Matrix B = q.B ? *q.B : Matrix(nu == 0 ? Matrix(0, 0) : Matrix());
  if (B.rows() != nu) throw std::invalid_argument("reconstruct_ambient_isometry: state needs B of size nu");
  Matrix src(a.N, a.N), dst(a.N, a.N);
  src << a.frame(q.x), a.normal_frame(q.x);
  dst << ah.frame(q.x_hat) * q.A, ah.normal_frame(q.x_hat) * B;
  AmbientIsometry g;
  g.A_bar = dst * src.transpose();
  g.r_bar = ah.embedding(q.x_hat) - g.A_bar * a.embedding(q.x);
  return g;
}

struct RollingReport {
  double noslip = 0.0;
  double notwist_tangential = 0.0;
  std::optional<double> notwist_normal;  // nullopt: vacuous
  std::string normal_status = "vacuous";  // "checked", "vacuous" (nu <= 1) or "intrinsic"
  bool orientation = true;

  bool passes(double tol = 1e-6) const {
    return noslip <= tol && notwist_tangential <= tol && notwist_normal.value_or(0.0) <= tol && orientation;
  }
};

inline RollingReport verify_rolling_conditions(const ManifoldPair& pair, const RollingTrajectory& traj) {
  RollingReport r;
  r.noslip = noslip_residual(pair, traj);
  bool oriented = true;
  for (const auto& q : traj.states) {
    if (q.A.determinant() <= 0.0 || orthogonality_defect(q.A) > 1e-9) oriented = false;
    if (q.B && q.B->size() > 0 && (q.B->determinant() <= 0.0 || orthogonality_defect(*q.B) > 1e-9))
      oriented = false;
  }
  r.orientation = oriented;
  if (!oriented) {
    // Parallel-frame coefficients are meaningless off SO(n); report the defect itself.
    r.notwist_tangential = std::numeric_limits<double>::infinity();
    return r;
  }
  const FrameDrift d = frame_coefficient_drift(pair, traj);
  r.notwist_tangential = d.tangential;
  const int nu = pair.nu();
  if (nu <= 1) {
    r.normal_status = "vacuous";
  } else if (!traj.extended()) {
    r.normal_status = "intrinsic";
  } else {
    r.normal_status = "checked";
    r.notwist_normal = d.normal;
  }
  return r;
}

}  // namespace rollkit
