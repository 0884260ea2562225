#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rollkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultRankTol = 1e-8;

/// 1-based index pair (i, j) with i < j naming the generator W_ij of so(n).
struct SkewIndex {
  int i = 1;
  int j = 2;
  auto operator<=>(const SkewIndex&) const = default;
};

inline std::string to_string(const SkewIndex& s) {
  return "W" + std::to_string(s.i) + std::to_string(s.j);
}

/// One term sign * W_idx of a bracket expansion.
struct SkewTerm {
  int sign = 1;
  SkewIndex idx;
  bool operator==(const SkewTerm&) const = default;
};

using BracketTable = std::map<std::pair<SkewIndex, SkewIndex>, std::vector<SkewTerm>>;

/// E_ij - E_ji in dimension n (1-based indices).
inline Matrix skew_basis(int n, SkewIndex idx) {
  if (n < 2 || idx.i < 1 || idx.j > n || idx.i >= idx.j) {
    throw std::invalid_argument("skew_basis: index (" + std::to_string(idx.i) + "," +
                                std::to_string(idx.j) + ") out of range for n=" +
                                std::to_string(n));
  }
  Matrix w = Matrix::Zero(n, n);
  w(idx.i - 1, idx.j - 1) = 1.0;
  w(idx.j - 1, idx.i - 1) = -1.0;
  return w;
}

inline std::vector<SkewIndex> skew_indices(int n) {
  std::vector<SkewIndex> out;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) out.push_back({i, j});
  return out;
}

namespace detail {

// Adds sign * W_ab to terms, normalizing to a < b and dropping W_aa.
inline void add_term(std::vector<SkewTerm>& terms, int sign, int a, int b) {
  if (a == b) return;
  if (a > b) {
    std::swap(a, b);
    sign = -sign;
  }
  for (auto it = terms.begin(); it != terms.end(); ++it) {
    if (it->idx.i == a && it->idx.j == b) {
      it->sign += sign;
      if (it->sign == 0) terms.erase(it);
      return;
    }
  }
  terms.push_back({sign, {a, b}});
}

}  // namespace detail

/// [W_ij, W_kl] = d_jk W_il + d_il W_jk - d_ik W_jl - d_jl W_ik for all ordered pairs.
inline BracketTable so_bracket_table(int n) {
  if (n < 2) throw std::invalid_argument("so_bracket_table: n must be >= 2");
  BracketTable table;
  const auto idx = skew_indices(n);
  for (const auto& p : idx) {
    for (const auto& q : idx) {
      const int i = p.i, j = p.j, k = q.i, l = q.j;
      std::vector<SkewTerm> terms;
      if (j == k) detail::add_term(terms, +1, i, l);
      if (i == l) detail::add_term(terms, +1, j, k);
      if (i == k) detail::add_term(terms, -1, j, l);
      if (j == l) detail::add_term(terms, -1, i, k);
      std::sort(terms.begin(), terms.end(),
                [](const SkewTerm& a, const SkewTerm& b) { return a.idx < b.idx; });
      table[{p, q}] = terms;
    }
  }
  return table;
}

inline Matrix skew_combination(int n, const std::vector<SkewTerm>& terms) {
  Matrix out = Matrix::Zero(n, n);
  for (const auto& t : terms) out += t.sign * skew_basis(n, t.idx);
  return out;
}

/// Singular values of the matrix whose columns are the given vectors.
inline Vector span_singular_values(const std::vector<Vector>& vectors) {
  if (vectors.empty()) throw std::invalid_argument("rank_of_span: empty input");
  const Eigen::Index len = vectors.front().size();
  Matrix m(len, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t c = 0; c < vectors.size(); ++c) {
    if (vectors[c].size() != len)
      throw std::invalid_argument("rank_of_span: vectors differ in length");
    if (!vectors[c].allFinite())
      throw std::invalid_argument("rank_of_span: non-finite entry");
    m.col(static_cast<Eigen::Index>(c)) = vectors[c];
  }
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

inline int rank_from_singular_values(const Vector& sv, Eigen::Index max_dim, double tol) {
  if (sv.size() == 0) return 0;
  const double cut = tol * sv.maxCoeff() * static_cast<double>(max_dim);
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv[k] > cut) ++rank;
  return rank;
}

/// Number of singular values above tol * sigma_max * max(rows, cols).
inline int rank_of_span(const std::vector<Vector>& vectors, double tol = kDefaultRankTol) {
  const Vector sv = span_singular_values(vectors);
  const Eigen::Index max_dim =
      std::max<Eigen::Index>(vectors.front().size(), static_cast<Eigen::Index>(vectors.size()));
  return rank_from_singular_values(sv, max_dim, tol);
}

inline bool is_skew(const Matrix& w, double tol = 1e-12) {
  if (w.rows() != w.cols()) return false;
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  return (w + w.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// ||Q^T Q - 1||_F
inline double orthogonality_defect(const Matrix& q) {
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).norm();
}

/// Exponential of a skew-symmetric matrix.
inline Matrix exp_skew(const Matrix& w) {
  if (!is_skew(w)) throw std::invalid_argument("exp_skew: input is not skew-symmetric");
  const Eigen::Index n = w.rows();
  if (n == 0) return Matrix(0, 0);
  if (n == 1) return Matrix::Identity(1, 1);
  if (n == 2) {
    const double a = w(0, 1);
    Matrix r(2, 2);
    r << std::cos(a), std::sin(a), -std::sin(a), std::cos(a);
    return r;
  }
  if (n == 3) {
    // Rodrigues: exp(W) = 1 + sin(t)/t W + (1 - cos t)/t^2 W^2 with t = |W|_F / sqrt(2).
    const double t = w.norm() / std::sqrt(2.0);
    const Matrix w2 = w * w;
    double a, b;
    if (t < 1e-4) {
      const double t2 = t * t;
      a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
      b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    } else {
      a = std::sin(t) / t;
      b = (1.0 - std::cos(t)) / (t * t);
    }
    return Matrix::Identity(3, 3) + a * w + b * w2;
  }
  const double norm1 = w.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const Matrix s = w / std::ldexp(1.0, squarings);
  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 12; ++k) {
    term = term * s / static_cast<double>(k);
    result += term;
  }
  for (int k = 0; k < squarings; ++k) result = result * result;
  return result;
}

/// Polar factor of M (nearest rotation in the Frobenius norm).
inline Matrix project_to_so(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("project_to_so: matrix not square");
  if (m.size() == 0) return m;
  if (!m.allFinite()) throw std::invalid_argument("project_to_so: non-finite entry");
  if (m.determinant() <= 0.0) throw std::invalid_argument("project_to_so: det <= 0");
  if (orthogonality_defect(m) > 0.5)
    throw std::invalid_argument("project_to_so: drift from SO(n) too large");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Row-major flattening, the serialization order for all matrices.
inline Vector flatten_row_major(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v[r * m.cols() + c] = m(r, c);
  return v;
}

inline Matrix unflatten_row_major(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("unflatten_row_major: size mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[r * cols + c];
  return m;
}

}  // namespace rollkit
