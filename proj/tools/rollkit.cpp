// rollkit: flag analysis, rolling integration, parallel transport and the
// built-in verification suite.
//
// Exit codes:
//   0  success
//   1  roll: residuals above 1e-6; verify: a criterion failed
//   2  malformed input (scenario, control, curve, flags)
//   3  analyze: rank-unstable flag
//   4  roll/transport: the trajectory left the chart

#include "rollkit/rollkit.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace {

using namespace rollkit;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kMalformed = 2;
constexpr int kRankUnstable = 3;
constexpr int kChartExit = 4;

struct Args {
  std::string scenario;
  std::string control;
  std::optional<double> T;
  double dt = 1e-3;
  std::string out;
  std::string filter;
  std::optional<double> fd_step;
  double rank_tol = kDefaultRankTol;
  std::string brackets = "auto";
  int max_step = 6;
  std::string manifold;
  std::string curve;
  std::string v0;
  bool normal = false;
  std::string mutate;
};

json parse_json_arg(const std::string& text, const std::string& what) {
  std::ifstream probe(text);
  if (probe) return io::read_json_file(text);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(what + ": neither a readable file nor valid JSON (" + e.what() + ")");
  }
}

Vector parse_vector_arg(const std::string& text, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw InputError(what + ": '" + cell + "' is not a number");
    }
  }
  if (vals.empty()) throw InputError(what + ": empty vector");
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::unique_ptr<std::ostream> open_out(const std::string& path) {
  auto f = std::make_unique<std::ofstream>(path);
  if (!*f) throw InputError("cannot write '" + path + "'");
  return f;
}

int cmd_analyze(const Args& a) {
  const Scenario s = load_scenario(a.scenario);
  ControllabilityOptions opt;
  opt.max_step = a.max_step;
  opt.flag.rank_tol = a.rank_tol;
  if (a.fd_step) opt.flag.fd_step = *a.fd_step;
  if (a.brackets == "exact") opt.flag.mode = BracketMode::exact;
  if (a.brackets == "fd") opt.flag.mode = BracketMode::finite_difference;
  FlagReport r;
  try {
    r = controllability_report(s.pair, s.q0, opt);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  std::cout << io::to_json(r).dump(2) << "\n";
  if (!r.stabilized) std::cerr << "warning: flag did not stabilize within " << a.max_step << " levels\n";
  if (!r.rank_stable) {
    std::cerr << "error: rank-unstable (" << r.comparison << " gives different ranks)\n";
    return kRankUnstable;
  }
  return kOk;
}

int cmd_roll(const Args& a) {
  const Scenario s = load_scenario(a.scenario);
  json cj;
  if (!a.control.empty()) {
    std::ifstream probe(a.control);
    cj = probe ? io::read_json_file(a.control) : json(a.control);
  } else if (s.control) {
    cj = *s.control;
  } else {
    throw InputError("roll: no --control given and the scenario has no default control");
  }
  const Control control = io::control_from_json(cj, s.pair.n());
  const double T = a.T ? *a.T : s.T.value_or(1.0);
  if (!(T > 0.0) || !(a.dt > 0.0)) throw InputError("roll: --T and --dt must be positive");

  std::unique_ptr<std::ostream> csv;
  if (!a.out.empty()) csv = open_out(a.out);
  RollingTrajectory traj;
  try {
    traj = integrate_rolling(s.pair, s.q0, control, T, a.dt);
  } catch (const ChartExit& e) {
    if (csv) {
      io::write_trajectory_csv(*csv, s.pair, e.partial);
      *csv << "# ERROR chart exit at t=" << io::format_number(e.t) << ": " << e.what() << "\n";
    }
    std::cerr << "error: " << e.what() << " at t=" << e.t << "\n";
    return kChartExit;
  }
  if (csv) io::write_trajectory_csv(*csv, s.pair, traj);
  const RollingReport rep = verify_rolling_conditions(s.pair, traj);
  std::cout << io::to_json(rep).dump(2) << "\n";
  return rep.passes(1e-6) ? kOk : kFailed;
}

int cmd_transport(const Args& a) {
  const FramedChart M = io::chart_from_json(parse_json_arg(a.manifold, "--manifold"), "--manifold");
  std::ifstream in(a.curve);
  if (!in) throw InputError("cannot open '" + a.curve + "'");
  auto [t, x] = io::read_curve_csv(in);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != M.m)
      throw InputError("curve: expected " + std::to_string(M.m) + " coordinates per row");
    if (auto why = M.domain_violation(x[i]))
      throw InputError("curve row " + std::to_string(i) + " is outside the chart: " + *why);
  }
  const Vector v0 = parse_vector_arg(a.v0, "--v0");
  CoefficientPath path;
  try {
    const Curve c = Curve::from_samples_fd(t, x, {});
    path = a.normal ? normal_parallel_transport(M, c, v0, a.dt) : parallel_transport(M, c, v0, a.dt);
  } catch (const DomainError& e) {
    std::cerr << "error: chart exit: " << e.what() << "\n";
    return kChartExit;
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  std::unique_ptr<std::ostream> file;
  if (!a.out.empty()) file = open_out(a.out);
  std::ostream& os = file ? *file : std::cout;
  os << "# rollkit " << kVersion << "\n" << "t";
  for (Eigen::Index k = 1; k <= v0.size(); ++k) os << ",z" << k;
  os << "\n";
  for (std::size_t i = 0; i < path.t.size(); ++i) {
    os << io::format_number(path.t[i]);
    for (Eigen::Index k = 0; k < path.z[i].rows(); ++k) os << "," << io::format_number(path.z[i](k, 0));
    os << "\n";
  }
  return kOk;
}

int cmd_verify(const Args& a) {
  SuiteOptions opt;
  opt.seed = seed_from_env();
  opt.filter = a.filter;
  if (!a.mutate.empty()) {
    if (a.mutate != "christoffel-sign") throw InputError("--mutate: only 'christoffel-sign' is supported");
    opt.flip_christoffel_sign = true;
  }
  const auto rows = VerificationSuite(opt).run();
  if (rows.empty()) throw InputError("verify: --filter '" + a.filter + "' matches no criterion");
  std::cout << format_results(rows);
  bool ok = true;
  for (const auto& r : rows) ok = ok && r.pass;
  std::cout << (ok ? "all " : "some ") << "criteria " << (ok ? "passed" : "failed") << "\n";
  return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rollkit: rolling manifolds without slipping or twisting"};
  app.require_subcommand(1);
  Args a;

  auto* analyze = app.add_subcommand("analyze", "flag ranks and controllability of a scenario (JSON on stdout)");
  analyze->add_option("--scenario", a.scenario, "scenario file or built-in name")->required();
  analyze->add_option("--fd-step", a.fd_step, "finite-difference bracket step");
  analyze->add_option("--rank-tol", a.rank_tol, "relative rank tolerance");
  analyze->add_option("--brackets", a.brackets, "auto, exact or fd")
      ->check(CLI::IsMember({"auto", "exact", "fd"}));
  analyze->add_option("--max-step", a.max_step, "maximal flag level")->check(CLI::Range(1, 6));

  auto* roll = app.add_subcommand("roll", "integrate a rolling (CSV to --out, residual JSON on stdout)");
  roll->add_option("--scenario", a.scenario, "scenario file or built-in name")->required();
  roll->add_option("--control", a.control, "control file or built-in name");
  roll->add_option("--T", a.T, "time horizon");
  roll->add_option("--dt", a.dt, "step size");
  roll->add_option("--out", a.out, "trajectory CSV");

  auto* transport = app.add_subcommand("transport", "parallel transport along a sampled curve");
  transport->add_option("--manifold", a.manifold, "manifold JSON or file, e.g. {\"type\":\"sphere\",\"n\":2}")
      ->required();
  transport->add_option("--curve", a.curve, "curve CSV with rows t,x1,...,xm")->required();
  transport->add_option("--v0", a.v0, "initial frame coefficients, comma separated")->required();
  transport->add_flag("--normal", a.normal, "transport normal coefficients");
  transport->add_option("--dt", a.dt, "maximal step size");
  transport->add_option("--out", a.out, "output CSV (default stdout)");

  auto* verify = app.add_subcommand("verify", "run the built-in verification suite");
  verify->add_option("--filter", a.filter, "run only criteria whose name contains this");
  verify->add_option("--mutate", a.mutate, "test hook: christoffel-sign");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kMalformed;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(a);
    if (roll->parsed()) return cmd_roll(a);
    if (transport->parsed()) return cmd_transport(a);
    return cmd_verify(a);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMalformed;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return kMalformed;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMalformed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
}
