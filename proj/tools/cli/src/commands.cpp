#include "jetflow_cli/commands.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "jetflow/connection.hpp"
#include "jetflow/format.hpp"

namespace jetflow::cli {

using nlohmann::json;

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t k = s.find(sep, start);
    out.emplace_back(s.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start));
    if (k == std::string_view::npos) break;
    start = k + 1;
  }
  return out;
}

/// d y / d t at every sample, second order on a possibly uneven grid.
std::vector<Eigen::VectorXd> differentiate(const std::vector<double>& t, const std::vector<Eigen::VectorXd>& y) {
  const std::size_t m = t.size();
  std::vector<Eigen::VectorXd> d(m, Eigen::VectorXd::Zero(y.empty() ? 0 : y[0].size()));
  if (m < 3) {
    if (m == 2) d[0] = d[1] = (y[1] - y[0]) / (t[1] - t[0]);
    return d;
  }
  auto three = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t at) {
    // Derivative at t[at] of the quadratic through samples a, b, c.
    const double x = t[at];
    const double wa = ((x - t[b]) + (x - t[c])) / ((t[a] - t[b]) * (t[a] - t[c]));
    const double wb = ((x - t[a]) + (x - t[c])) / ((t[b] - t[a]) * (t[b] - t[c]));
    const double wc = ((x - t[a]) + (x - t[b])) / ((t[c] - t[a]) * (t[c] - t[b]));
    return Eigen::VectorXd(wa * y[a] + wb * y[b] + wc * y[c]);
  };
  d[0] = three(0, 1, 2, 0);
  for (std::size_t k = 1; k + 1 < m; ++k) d[k] = three(k - 1, k, k + 1, k);
  d[m - 1] = three(m - 3, m - 2, m - 1, m - 1);
  return d;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

json jet_vector_json(const JetVector& v) {
  return json{{"t", to_vec(v.t)}, {"x", to_vec(v.x)}, {"v", matrix_json(v.v)}};
}

}  // namespace

GeodesicResult run_geodesic(const Scenario& s, const GeodesicRequest& req) {
  if (s.p != 1) throw std::invalid_argument("geodesic: the scenario's temporal dimension must be 1");
  if (req.x0.size() != s.n || req.v0.size() != s.n)
    throw std::invalid_argument("geodesic: --x0 and --v0 need " + std::to_string(s.n) + " components");
  const MultiTimeSpray sprays{canonical_temporal(s.h(), s.n), canonical_spatial(s.phi(), 1)};
  GeodesicResult g;
  g.trajectory = solve_affine_ode(sprays, req.x0, req.v0, req.t0, req.tmax, req.step);
  const Trajectory& tr = g.trajectory;
  const auto acc = differentiate(tr.t, tr.v);
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    const JetPoint u{Eigen::VectorXd::Constant(1, tr.t[k]), tr.x[k], tr.v[k]};
    NdArray second({static_cast<std::size_t>(s.n), 1, 1});
    for (int i = 0; i < s.n; ++i) second(i, 0, 0) = acc[k](i);
    g.residual.push_back(harmonic_residual(u, second, sprays, s.h()).cwiseAbs().maxCoeff());
  }
  return g;
}

void write_geodesic(std::ostream& os, const GeodesicResult& g, std::string_view format) {
  if (format == "csv") {
    write_trajectory_csv(os, g.trajectory, g.residual);
    return;
  }
  if (format != "json") throw std::invalid_argument("unknown output format '" + std::string(format) + "'");
  json samples = json::array();
  const Trajectory& tr = g.trajectory;
  for (std::size_t k = 0; k < tr.t.size(); ++k)
    samples.push_back(json{{"t", tr.t[k]}, {"x", to_vec(tr.x[k])}, {"v", to_vec(tr.v[k])}, {"residual", g.residual[k]}});
  os << json{{"samples", samples}}.dump(2) << '\n';
}

std::vector<Expr> parse_boundary(std::string_view text, int n) {
  std::vector<std::string> parts;
  if (text == "linear") {
    parts = {"1 + 0.5*t1 - 0.25*t2"};
  } else if (text == "saddle") {
    parts = {"t1^2 - t2^2"};
  } else if (text == "cubic") {
    parts = {"t1^3 - 3*t1*t2^2"};
  } else {
    parts = split(text, ';');
  }
  if (parts.size() == 1) parts.assign(static_cast<std::size_t>(n), parts[0]);
  if (parts.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("boundary: expected 1 or " + std::to_string(n) + " expressions");
  std::vector<Expr> out;
  for (const std::string& p : parts) {
    Expr e = parse(p);
    for (const std::string& v : variables_of(e))
      if (v != "t1" && v != "t2") throw std::invalid_argument("boundary: unknown variable '" + v + "'");
    out.push_back(std::move(e));
  }
  return out;
}

GridMap run_harmonic(const Scenario& s, const HarmonicRequest& req) {
  if (s.p != 2) throw std::invalid_argument("harmonic: the scenario's temporal dimension must be 2");
  const MultiTimeSpray sprays{canonical_temporal(s.h(), s.n), canonical_spatial(s.phi(), 2)};
  std::vector<CompiledExpr> bc;
  const std::vector<std::string> names{"t1", "t2"};
  for (const Expr& e : req.boundary) bc.emplace_back(e, names);
  const BoundaryData data = [&bc](double a, double b) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(bc.size()));
    const std::vector<double> z{a, b};
    for (std::size_t i = 0; i < bc.size(); ++i) v(static_cast<Eigen::Index>(i)) = bc[i](z);
    return v;
  };
  return solve_harmonic_grid(sprays, s.h(), data, s.n, req.options);
}

void write_harmonic(std::ostream& os, const GridMap& g, std::string_view format) {
  if (format == "csv") {
    write_grid_csv(os, g);
    return;
  }
  if (format != "json") throw std::invalid_argument("unknown output format '" + std::string(format) + "'");
  json nodes = json::array();
  for (int a = 0; a < g.m; ++a)
    for (int b = 0; b < g.m; ++b)
      nodes.push_back(json{{"t", {g.t1(a), g.t2(b)}},
                           {"x", to_vec(g.at(a, b))},
                           {"residual", g.residual[static_cast<std::size_t>(a * g.m + b)]}});
  const char* status = g.status == GridStatus::converged ? "converged"
                       : g.status == GridStatus::diverged ? "diverged"
                                                          : "max_iters";
  os << json{{"status", status},
             {"iterations", g.iterations},
             {"initial_residual", g.initial_residual},
             {"final_residual", g.final_residual},
             {"nodes", nodes}}
            .dump(2)
     << '\n';
}

void write_convergence_log(std::ostream& os, const GridMap& g) {
  os << "iteration,residual\n";
  for (const auto& [it, r] : g.log) os << it << ',' << format_double(r) << '\n';
}

BaseVectorField parse_field(std::string_view text, int p, int n) {
  const auto parts = split(text, ',');
  if (parts.size() != static_cast<std::size_t>(p + n))
    throw std::invalid_argument("field: expected " + std::to_string(p + n) + " comma-separated expressions");
  std::vector<Expr> t, x;
  for (int k = 0; k < p + n; ++k) (k < p ? t : x).push_back(parse(parts[static_cast<std::size_t>(k)]));
  return BaseVectorField(p, n, std::move(t), std::move(x));
}

json prolong_report(const Scenario& s, const BaseVectorField& X, const JetPoint& u, double eps) {
  u.check();
  const NonlinearConnection canon = canonical_connection(s.h(), s.phi());
  const JetVector pr = olver_prolong(X)(u);
  const JetVector hl = horizontal_lift(X, canon)(u);
  const double coarse = flow_prolong_check(X, u, eps);
  const double fine = flow_prolong_check(X, u, eps / 2);
  json flow{{"eps", eps}, {"discrepancy", coarse}, {"discrepancy_half", fine}};
  flow["ratio"] = fine > 0.0 ? json(coarse / fine) : json(nullptr);
  return json{{"at", jet_to_json(u)},
              {"prolongation", jet_vector_json(pr)},
              {"horizontal_lift", jet_vector_json(hl)},
              {"vertical_gap", matrix_json(vertical_gap(X, canon, u))},
              {"flow", flow}};
}

}  // namespace jetflow::cli
