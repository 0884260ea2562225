#pragma once

// Lie brackets of vector fields and the flag D^1 = D, D^{i+1} = D + [D, D^i].

#include "rollkit/rolling.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace rollkit {

enum class BracketMode { automatic, exact, finite_difference };

inline std::string to_string(BracketMode m) {
  switch (m) {
    case BracketMode::exact: return "exact";
    case BracketMode::finite_difference: return "finite_difference";
    default: return "automatic";
  }
}

/// [X, Y](p) = DY(p) X(p) - DX(p) Y(p) by central differences along X(p) and Y(p).
/// The step is h (1 + |p|), taken along the unit direction.
inline Vector lie_bracket_numeric(const VectorFieldHandle& X, const VectorFieldHandle& Y, const Vector& p,
                                  double h = 1e-5) {
  if (!(h > 0.0)) throw std::invalid_argument("lie_bracket_numeric: step must be positive");
  const double step = h * (1.0 + p.norm());
  auto directional = [&](const VectorFieldHandle& F, const Vector& d) -> Vector {
    const double len = d.norm();
    if (len == 0.0) return Vector::Zero(p.size());
    const Vector dir = d / len;
    return len * (F(p + step * dir) - F(p - step * dir)) / (2.0 * step);
  };
  return directional(Y, X(p)) - directional(X, Y(p));
}

namespace detail {

// D F(p)[d] over Jets: seed a fresh infinitesimal above those already carried by
// p and d, then keep the coefficients that contain it.
inline JetVector jet_directional(const VectorFieldHandle& F, const JetVector& p, const JetVector& d) {
  int depth = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) depth = std::max({depth, p[i].depth(), d[i].depth()});
  const unsigned bit = 1u << depth;
  JetVector q = p;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    q[i].raise_depth(depth + 1);
    for (int a = 0; a < d[i].width(); ++a) q[i][bit | static_cast<unsigned>(a)] += d[i][static_cast<unsigned>(a)];
  }
  const JetVector r = F.eval_jet(q);
  JetVector out(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    Jet v;
    v.raise_depth(depth);
    for (int a = 0; a < (1 << depth); ++a) v[static_cast<unsigned>(a)] = r[i][bit | static_cast<unsigned>(a)];
    out[i] = v;
  }
  return out;
}

inline std::string bracket_label(const std::string& a, const std::string& b) { return "[" + a + "," + b + "]"; }

}  // namespace detail

/// The field [X, Y].  Exact (nested Taylor arithmetic) when both inputs are,
/// otherwise central differences with step h.
inline VectorFieldHandle bracket(const VectorFieldHandle& X, const VectorFieldHandle& Y, double h = 1e-5,
                                 BracketMode mode = BracketMode::automatic) {
  VectorFieldHandle out;
  out.label = detail::bracket_label(X.label, Y.label);
  out.depth = X.depth + Y.depth;
  const bool exact = mode != BracketMode::finite_difference && X.exact() && Y.exact();
  if (mode == BracketMode::exact && !exact)
    throw std::invalid_argument("bracket: exact mode requested for a field without a Taylor evaluator");
  if (exact) {
    if (out.depth - 1 > Jet::kMaxDepth)
      throw std::length_error("bracket: nesting deeper than the Taylor arithmetic supports");
    out.eval_jet = [X, Y](const JetVector& p) -> JetVector {
      return detail::jet_directional(Y, p, X.eval_jet(p)) - detail::jet_directional(X, p, Y.eval_jet(p));
    };
    out.eval = [f = out.eval_jet](const Vector& p) -> Vector { return jet_values(f(to_jet(p))); };
  } else {
    out.eval = [X, Y, h](const Vector& p) -> Vector { return lie_bracket_numeric(X, Y, p, h); };
  }
  return out;
}

struct FlagOptions {
  BracketMode mode = BracketMode::automatic;
  double fd_step = 1e-5;
  double rank_tol = kDefaultRankTol;
};

struct FlagReport {
  std::vector<int> ranks;
  int step = 0;
  int config_dim = 0;
  int orbit_dim = 0;
  bool controllable = false;
  std::vector<std::vector<std::string>> provenance;  // field labels per level
  bool stabilized = false;  // full rank reached or two equal consecutive ranks
  bool rank_stable = true;
  std::string bracket_mode;
  std::vector<int> comparison_ranks;  // ranks from the cross-check (other step or nearby point)
  std::string comparison;             // what comparison_ranks were computed with
};

/// Ranks of D^1, D^2, ... at p.  Level i+1 adds [g, f] for generators g and
/// fields f of level i (only g < f at level 2, since [g, g] = 0 and [f, g] = -[g, f]).
/// Stops when the rank equals config_dim, repeats, or max_step is reached.
inline FlagReport compute_flag(const std::vector<VectorFieldHandle>& generators, const Vector& p, int max_step,
                               int config_dim, const FlagOptions& opt = {}) {
  if (generators.empty()) throw std::invalid_argument("compute_flag: no generators");
  if (max_step < 1) throw std::invalid_argument("compute_flag: max_step must be at least 1");
  if (config_dim < 1) throw std::invalid_argument("compute_flag: config_dim must be positive");
  bool all_exact = std::all_of(generators.begin(), generators.end(), [](const auto& g) { return g.exact(); });
  const BracketMode mode = opt.mode == BracketMode::automatic
                               ? (all_exact ? BracketMode::exact : BracketMode::finite_difference)
                               : opt.mode;

  FlagReport rep;
  rep.config_dim = config_dim;
  rep.bracket_mode = to_string(mode);
  std::vector<Vector> span;
  std::vector<VectorFieldHandle> level = generators;
  for (int i = 1; i <= max_step; ++i) {
    if (i > 1) {
      std::vector<VectorFieldHandle> next;
      for (std::size_t g = 0; g < generators.size(); ++g) {
        for (std::size_t f = 0; f < level.size(); ++f) {
          if (i == 2 && f <= g) continue;
          next.push_back(bracket(generators[g], level[f], opt.fd_step, mode));
        }
      }
      level = std::move(next);
    }
    std::vector<std::pair<std::string, Vector>> values;
    for (const auto& f : level) {
      Vector v = f(p);
      if (v.size() != p.size()) throw std::invalid_argument("compute_flag: field " + f.label + " has wrong size");
      values.emplace_back(f.label, std::move(v));
    }
    std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::string> labels;
    for (auto& [label, v] : values) {
      labels.push_back(label);
      span.push_back(std::move(v));
    }
    rep.provenance.push_back(std::move(labels));
    rep.ranks.push_back(rank_of_span(span, opt.rank_tol));
    const int r = rep.ranks.back();
    if (r == config_dim || (i > 1 && r == rep.ranks[rep.ranks.size() - 2])) {
      rep.stabilized = true;
      break;
    }
  }
  rep.orbit_dim = rep.ranks.back();
  rep.step = static_cast<int>(std::find(rep.ranks.begin(), rep.ranks.end(), rep.orbit_dim) - rep.ranks.begin()) + 1;
  rep.controllable = rep.stabilized && rep.orbit_dim == config_dim;
  return rep;
}

struct ControllabilityOptions {
  FlagOptions flag;
  int max_step = 6;
  bool cross_check = true;
};

/// Flag of the rolling distribution at q0.  The rank sequence is cross-checked:
/// with finite differences, against the second step size (1e-4 vs 1e-5); with
/// exact brackets, at a nearby point of the orbit reached by a short rolling.
/// Disagreement marks the report rank-unstable.
inline FlagReport controllability_report(const ManifoldPair& pair, const ConfigPoint& q0,
                                         const ControllabilityOptions& opt = {}) {
  require_valid(pair, q0);
  const bool ext = q0.extended();
  const auto fields = rolling_fields(pair, ext);
  const Vector p = pack_state(pair, q0);
  const int dim = config_dim(pair, ext);
  FlagReport rep = compute_flag(fields, p, opt.max_step, dim, opt.flag);
  if (!opt.cross_check) return rep;

  if (rep.bracket_mode == "finite_difference") {
    FlagOptions other = opt.flag;
    other.mode = BracketMode::finite_difference;
    other.fd_step = opt.flag.fd_step == 1e-4 ? 1e-5 : 1e-4;
    const FlagReport alt = compute_flag(fields, p, opt.max_step, dim, other);
    rep.comparison_ranks = alt.ranks;
    rep.comparison = "fd_step=" + std::string(other.fd_step == 1e-4 ? "1e-4" : "1e-5");
  } else {
    Vector u(pair.n());
    for (int k = 0; k < pair.n(); ++k) u[k] = 1.0 / (k + 2.0);
    const RollingTrajectory tr = integrate_rolling(pair, q0, Control::constant(u), 0.05, 0.01);
    const FlagReport alt = compute_flag(fields, pack_state(pair, tr.states.back()), opt.max_step, dim, opt.flag);
    rep.comparison_ranks = alt.ranks;
    rep.comparison = "nearby orbit point";
  }
  rep.rank_stable = rep.comparison_ranks == rep.ranks;
  return rep;
}

/// The left-invariant field A -> A W_ij on SO(n), acting on row-major A.
inline VectorFieldHandle so_left_invariant_field(int n, SkewIndex idx) {
  const Matrix w = skew_basis(n, idx);
  return make_field("W" + std::to_string(idx.i) + std::to_string(idx.j), [w, n](const auto& p) {
    using S = typename std::decay_t<decltype(p)>::Scalar;
    MatT<S> a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = p[i * n + j];
    const MatT<S> prod = a * w.cast<S>();
    VecT<S> out(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[i * n + j] = prod(i, j);
    return out;
  });
}

}  // namespace rollkit
