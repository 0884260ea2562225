#pragma once

#include "rollkit/io.hpp"

#include <string>
#include <vector>

namespace rollkit {

inline std::vector<std::string> builtin_scenario_names() {
  return {"sphere_plane_2d", "sphere_plane_n", "se3_example", "circle_line", "circle_spiral"};
}

/// Scenario JSON for a built-in name.  "sphere_plane_n" accepts a suffix ":n"
/// (default 3).
inline json builtin_scenario_json(const std::string& name) {
  const double two_pi = 2.0 * std::acos(-1.0);
  if (name == "sphere_plane_2d")
    return {{"name", name},
            {"manifold", {{"type", "sphere"}, {"n", 2}}},
            {"hat_manifold", {{"type", "euclidean"}, {"n", 2}}},
            {"control", {{"type", "constant"}, {"u", {1.0, 0.0}}}},
            {"T", 1.0}};
  if (name.rfind("sphere_plane_n", 0) == 0) {
    int n = 3;
    if (name.size() > 14) {
      if (name[14] != ':') throw InputError("unknown scenario '" + name + "'");
      try {
        n = std::stoi(name.substr(15));
      } catch (const std::exception&) {
        throw InputError("scenario '" + name + "': bad dimension");
      }
    }
    std::vector<double> u(static_cast<std::size_t>(std::max(n, 1)), 0.0);
    u[0] = 1.0;
    return {{"name", name},
            {"manifold", {{"type", "sphere"}, {"n", n}}},
            {"hat_manifold", {{"type", "euclidean"}, {"n", n}}},
            {"control", {{"type", "constant"}, {"u", u}}},
            {"T", 1.0}};
  }
  if (name == "se3_example")
    return {{"name", name},
            {"manifold", {{"type", "se3"}}},
            {"hat_manifold", {{"type", "se3_flat"}}},
            {"extended", true},
            {"control", "se3_example"},
            {"T", 1.0}};
  if (name == "circle_line" || name == "circle_spiral")
    return {{"name", name},
            {"manifold", {{"type", "circle"}, {"N", 3}}},
            {"hat_manifold", {{"type", name == "circle_line" ? "line" : "spiral"}}},
            {"extended", true},
            {"control", {{"type", "constant"}, {"u", {1.0}}}},
            {"T", two_pi}};
  throw InputError("unknown scenario '" + name + "'");
}

inline Scenario builtin_scenario(const std::string& name) { return io::scenario_from_json(builtin_scenario_json(name)); }

/// A file path when the file exists, otherwise a built-in name.
inline Scenario load_scenario(const std::string& spec) {
  std::ifstream probe(spec);
  if (probe) return io::scenario_from_json(io::read_json_file(spec));
  return builtin_scenario(spec);
}

}  // namespace rollkit
