#include "jetflow_cli/app.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "jetflow/format.hpp"
#include "jetflow_cli/commands.hpp"
#include "jetflow_cli/verify.hpp"

namespace jetflow::cli {

namespace {

Eigen::VectorXd parse_vector(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("not a number: '" + item + "'");
    vals.push_back(v);
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

/// Writes to --out when given, else to `out`.
template <class F>
void emit(const std::string& path, std::ostream& out, F&& write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write(f);
}

}  // namespace

int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geometry on the first-order jet bundle J1(T, M)", "jetflow"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;

  auto* verify = app.add_subcommand("verify", "Run tensoriality and law checks for a scenario");
  std::string suite = "all";
  verify->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  verify->add_option("--suite", suite, "adapted|connection|dtensors|prolong|sprays|all");
  verify->add_option("--seed", seed, "Override the scenario seed");

  auto* geodesic = app.add_subcommand("geodesic", "Integrate the affine ODE for p = 1");
  std::string x0, v0, format = "csv", out_path;
  double t0 = 0.0, tmax = 1.0, step = 1e-2;
  geodesic->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  geodesic->add_option("--x0", x0, "Initial point, comma separated")->required();
  geodesic->add_option("--v0", v0, "Initial velocity, comma separated")->required();
  geodesic->add_option("--t0", t0);
  geodesic->add_option("--tmax", tmax);
  geodesic->add_option("--step", step);
  geodesic->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  geodesic->add_option("--out", out_path);

  auto* harmonic = app.add_subcommand("harmonic", "Solve the Dirichlet problem for harmonic maps, p = 2");
  HarmonicRequest hreq;
  std::string boundary = "linear", log_path;
  bool zero_guess = false;
  harmonic->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  harmonic->add_option("--grid", hreq.options.m, "Nodes per side")->check(CLI::Range(3, 4097));
  harmonic->add_option("--boundary", boundary, "linear|saddle|cubic or ';'-separated expressions in t1, t2");
  harmonic->add_option("--tol", hreq.options.tol);
  harmonic->add_option("--max-iters", hreq.options.max_iters);
  harmonic->add_option("--damping", hreq.options.damping);
  harmonic->add_option("--workers", hreq.options.workers)->check(CLI::PositiveNumber);
  harmonic->add_flag("--zero-guess", zero_guess, "Start the interior at zero");
  harmonic->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  harmonic->add_option("--out", out_path);
  harmonic->add_option("--log", log_path, "Write the convergence log as CSV");

  auto* prolong = app.add_subcommand("prolong", "Prolongation and horizontal lift of a base field at a jet");
  std::string field, at;
  double eps = 1e-3;
  prolong->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  prolong->add_option("--field", field, "p + n comma-separated expressions")->required();
  prolong->add_option("--at", at, "Jet as JSON {\"t\":[..],\"x\":[..],\"v\":[[..]..]}")->required();
  prolong->add_option("--eps", eps)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (!seed) seed = seed_from_environment();
    const Scenario s = load_scenario_file(scenario_path, seed);

    if (*verify) {
      const SuiteReport r = run_suite(s, suite);
      out << report_json(s, r).dump(2) << '\n';
      return r.pass() ? 0 : 1;
    }
    if (*geodesic) {
      const GeodesicResult g = run_geodesic(s, {parse_vector(x0), parse_vector(v0), t0, tmax, step});
      emit(out_path, out, [&](std::ostream& os) { write_geodesic(os, g, format); });
      return 0;
    }
    if (*harmonic) {
      hreq.options.transfinite_guess = !zero_guess;
      hreq.boundary = parse_boundary(boundary, s.n);
      const GridMap g = run_harmonic(s, hreq);
      emit(out_path, out, [&](std::ostream& os) { write_harmonic(os, g, format); });
      if (!log_path.empty()) emit(log_path, out, [&](std::ostream& os) { write_convergence_log(os, g); });
      err << "harmonic: " << (g.status == GridStatus::converged ? "converged" : "not converged") << " after "
          << g.iterations << " iterations, residual " << format_double(g.final_residual) << '\n';
      return g.status == GridStatus::converged ? 0 : 1;
    }
    if (*prolong) {
      const JetPoint u = parse_jet(nlohmann::json::parse(at), s.p, s.n, "/at");
      out << prolong_report(s, parse_field(field, s.p, s.n), u, eps).dump(2) << '\n';
      return 0;
    }
  } catch (const ScenarioError& e) {
    err << "jetflow: scenario error: " << e.what() << '\n';
    return 2;
  } catch (const IntegrationError& e) {
    err << "jetflow: integration stopped at t = " << format_double(e.time_reached) << ": " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "jetflow: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace jetflow::cli
