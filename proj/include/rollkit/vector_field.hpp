#pragma once

#include "rollkit/jet.hpp"
#include "rollkit/matrix_core.hpp"

#include <functional>
#include <string>

namespace rollkit {

using JetVector = Eigen::Matrix<Jet, Eigen::Dynamic, 1>;

/// A vector field on a representation space R^M.  `eval_jet`, when present,
/// evaluates the same field over Jet scalars so that brackets can be formed by
/// exact nested differentiation instead of finite differences.
struct VectorFieldHandle {
  std::string label;
  std::function<Vector(const Vector&)> eval;
  std::function<JetVector(const JetVector&)> eval_jet;
  int depth = 1;  // number of generators in the bracket expression

  Vector operator()(const Vector& p) const { return eval(p); }
  bool exact() const { return static_cast<bool>(eval_jet); }
};

inline JetVector to_jet(const Vector& p) {
  JetVector q(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) q[i] = Jet(p[i]);
  return q;
}

inline Vector jet_values(const JetVector& q) {
  Vector p(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) p[i] = q[i].value();
  return p;
}

/// Builds a handle from a generic callable usable with double and Jet scalars.
template <class F>
VectorFieldHandle make_field(std::string label, F f) {
  VectorFieldHandle h;
  h.label = std::move(label);
  h.eval = [f](const Vector& p) -> Vector { return f(p); };
  h.eval_jet = [f](const JetVector& p) -> JetVector { return f(p); };
  return h;
}

}  // namespace rollkit
