#pragma once

// JSON scenarios and reports, CSV trajectories and curves.

#include "rollkit/flag.hpp"
#include "rollkit/rolling.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace rollkit {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

/// Malformed input files (scenarios, controls, curves).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError(what + ": entry " + std::to_string(i) + " is not a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InputError(what + ": expected a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector r = vector_from_json(j[i], what + " row " + std::to_string(i));
    if (static_cast<std::size_t>(r.size()) != cols) throw InputError(what + ": ragged rows");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

inline int int_field(const json& j, const char* key, int fallback, const std::string& what) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw InputError(what + ": '" + key + "' must be an integer");
  return j[key].get<int>();
}

// "pole_sign": "+" / "-" (or +1 / -1); default "+".
inline int pole_sign_field(const json& j, const std::string& what) {
  if (!j.contains("pole_sign")) return 1;
  const json& v = j["pole_sign"];
  if (v.is_string() && v == "+") return 1;
  if (v.is_string() && v == "-") return -1;
  if (v.is_number_integer() && (v == 1 || v == -1)) return v.get<int>();
  throw InputError(what + ": 'pole_sign' must be \"+\" or \"-\"");
}

inline FramedChart chart_from_json(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw InputError(what + ": expected an object with a string 'type'");
  const std::string type = j["type"].get<std::string>();
  try {
    if (type == "euclidean") return euclidean(int_field(j, "n", 2, what));
    if (type == "sphere") return sphere(int_field(j, "n", 2, what), pole_sign_field(j, what));
    if (type == "se3") return se3();
    if (type == "se3_flat") return se3_flat();
    if (type == "circle") return circle(int_field(j, "N", 3, what));
    if (type == "line") return line(int_field(j, "N", 3, what));
    if (type == "spiral") return spiral();
  } catch (const std::invalid_argument& e) {
    throw InputError(what + ": " + e.what());
  }
  throw InputError(what + ": unknown manifold type '" + type + "'");
}

inline json chart_to_json_hint(const FramedChart& M) { return json{{"name", M.name}, {"n", M.n}, {"m", M.m}}; }

}  // namespace io

/// A rolling problem: the pair, an initial configuration and optional defaults
/// for the control and horizon.
struct Scenario {
  std::string name;
  ManifoldPair pair;
  ConfigPoint q0;
  std::optional<json> control;
  std::optional<double> T;
};

namespace io {

inline Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw InputError("scenario: expected a JSON object");
  if (!j.contains("manifold") || !j.contains("hat_manifold"))
    throw InputError("scenario: 'manifold' and 'hat_manifold' are required");
  FramedChart M = chart_from_json(j["manifold"], "manifold");
  FramedChart Mh = chart_from_json(j["hat_manifold"], "hat_manifold");
  if (M.n != Mh.n)
    throw InputError("scenario: manifolds have different dimensions (" + std::to_string(M.n) + " vs " +
                     std::to_string(Mh.n) + ")");
  Scenario s{j.value("name", std::string("custom")), ManifoldPair(M, Mh), {}, std::nullopt, std::nullopt};
  const int n = M.n;
  s.q0.x = j.contains("x0") ? vector_from_json(j["x0"], "x0") : M.base_point;
  s.q0.x_hat = j.contains("x_hat0") ? vector_from_json(j["x_hat0"], "x_hat0") : Mh.base_point;
  s.q0.A = j.contains("A0") ? matrix_from_json(j["A0"], "A0") : Matrix::Identity(n, n);
  if (s.q0.x.size() != M.m) throw InputError("x0: expected " + std::to_string(M.m) + " coordinates");
  if (s.q0.x_hat.size() != Mh.m) throw InputError("x_hat0: expected " + std::to_string(Mh.m) + " coordinates");
  const bool extended = j.value("extended", false) || j.contains("B0");
  if (extended) {
    const int nu = s.pair.nu();
    if (nu < 0) throw InputError("scenario: extended rolling needs ambient data of equal codimension");
    s.q0.B = j.contains("B0") ? matrix_from_json(j["B0"], "B0") : Matrix::Identity(nu, nu);
  }
  try {
    require_valid(s.pair, s.q0);
  } catch (const std::exception& e) {
    throw InputError(std::string("scenario: invalid initial configuration: ") + e.what());
  }
  if (j.contains("control")) s.control = j["control"];
  if (j.contains("T")) {
    if (!j["T"].is_number()) throw InputError("scenario: 'T' must be a number");
    s.T = j["T"].get<double>();
  }
  return s;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

}  // namespace io

/// Built-in control "se3_example": theta(t) = psi(t) = t, i.e. u = (sqrt 2, 0, 0, 0, 0, 1).
inline Control named_control(const std::string& name) {
  if (name == "se3_example") {
    Vector u = Vector::Zero(6);
    u[0] = std::sqrt(2.0);
    u[5] = 1.0;
    return Control::constant(u);
  }
  throw InputError("unknown control '" + name + "'");
}

namespace io {

/// {"type":"constant","u":[...]} or
/// {"type":"piecewise_constant","knots":[...],"values":[[...], ...]} or a name string.
inline Control control_from_json(const json& j, int n) {
  Control c = [&] {
    if (j.is_string()) return named_control(j.get<std::string>());
    if (!j.is_object() || !j.contains("type")) throw InputError("control: expected an object with 'type'");
    const std::string type = j["type"].get<std::string>();
    if (type == "constant") {
      if (!j.contains("u")) throw InputError("control: constant control needs 'u'");
      return Control::constant(vector_from_json(j["u"], "control.u"));
    }
    if (type == "piecewise_constant") {
      if (!j.contains("knots") || !j.contains("values"))
        throw InputError("control: piecewise_constant needs 'knots' and 'values'");
      const Vector knots = vector_from_json(j["knots"], "control.knots");
      if (!j["values"].is_array()) throw InputError("control.values: expected an array");
      std::vector<Vector> values;
      for (std::size_t i = 0; i < j["values"].size(); ++i)
        values.push_back(vector_from_json(j["values"][i], "control.values[" + std::to_string(i) + "]"));
      try {
        return Control::piecewise_constant(std::vector<double>(knots.data(), knots.data() + knots.size()),
                                           std::move(values));
      } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
      }
    }
    throw InputError("control: unknown type '" + type + "'");
  }();
  if (c(0.0).size() != n)
    throw InputError("control: expected " + std::to_string(n) + " components per value");
  return c;
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trajectory_header(std::ostream& os, const ManifoldPair& pair, bool extended) {
  os << "# rollkit " << kVersion << "\n";
  os << "t";
  const int n = pair.n();
  for (int k = 1; k <= n; ++k) os << ",u" << k;
  for (int k = 1; k <= pair.M.m; ++k) os << ",x" << k;
  for (int k = 1; k <= pair.M_hat.m; ++k) os << ",xh" << k;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) os << ",A" << i << "_" << j;
  if (extended)
    for (int i = 1; i <= pair.nu(); ++i)
      for (int j = 1; j <= pair.nu(); ++j) os << ",B" << i << "_" << j;
  os << "\n";
}

inline void write_trajectory_rows(std::ostream& os, const RollingTrajectory& traj) {
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const ConfigPoint& q = traj.states[i];
    os << format_number(traj.t[i]);
    auto put = [&](const Vector& v) {
      for (Eigen::Index k = 0; k < v.size(); ++k) os << "," << format_number(v[k]);
    };
    put(traj.u[i]);
    put(q.x);
    put(q.x_hat);
    put(flatten_row_major(q.A));
    if (q.B) put(flatten_row_major(*q.B));
    os << "\n";
  }
}

inline void write_trajectory_csv(std::ostream& os, const ManifoldPair& pair, const RollingTrajectory& traj) {
  write_trajectory_header(os, pair, traj.extended());
  write_trajectory_rows(os, traj);
}

/// Reads "t,x1,...,xm" rows; lines starting with '#' and a non-numeric header are skipped.
inline std::pair<std::vector<double>, std::vector<Vector>> read_curve_csv(std::istream& in) {
  std::vector<double> t;
  std::vector<Vector> x;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (t.empty() && x.empty()) continue;  // header
      throw InputError("curve CSV line " + std::to_string(lineno) + ": non-numeric entry");
    }
    if (vals.size() < 2) throw InputError("curve CSV line " + std::to_string(lineno) + ": need t and coordinates");
    if (!x.empty() && static_cast<Eigen::Index>(vals.size() - 1) != x.front().size())
      throw InputError("curve CSV line " + std::to_string(lineno) + ": ragged row");
    t.push_back(vals[0]);
    x.push_back(Eigen::Map<const Vector>(vals.data() + 1, static_cast<Eigen::Index>(vals.size() - 1)));
  }
  if (t.size() < 2) throw InputError("curve CSV: need at least two rows");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw InputError("curve CSV: times must increase");
  return {std::move(t), std::move(x)};
}

inline json to_json(const FlagReport& r) {
  json j{{"ranks", r.ranks},
         {"step", r.step},
         {"config_dim", r.config_dim},
         {"orbit_dim", r.orbit_dim},
         {"controllable", r.controllable},
         {"provenance", r.provenance},
         {"stabilized", r.stabilized},
         {"rank_stable", r.rank_stable},
         {"bracket_mode", r.bracket_mode}};
  if (!r.comparison.empty()) j["cross_check"] = json{{"ranks", r.comparison_ranks}, {"with", r.comparison}};
  return j;
}

inline json to_json(const RollingReport& r) {
  json j{{"noslip", r.noslip}, {"notwist_tangential", r.notwist_tangential}, {"orientation", r.orientation}};
  if (r.notwist_normal)
    j["notwist_normal"] = *r.notwist_normal;
  else
    j["notwist_normal"] = r.normal_status;
  return j;
}

}  // namespace io
}  // namespace rollkit
