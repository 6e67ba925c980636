// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed here and nowhere else.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "jetflow/connection.hpp"
#include "jetflow/dtensor.hpp"
#include "jetflow/maps.hpp"
#include "jetflow/prolong.hpp"
#include "jetflow/spray.hpp"
#include "jetflow_cli/app.hpp"
#include "testkit.hpp"

using namespace jetflow;

namespace {

constexpr double kTolSymbolic = 1e-8;
constexpr double kTolSplit = 1e-12;
constexpr double kTolSpatialRoundTrip = 1e-10;
constexpr double kTolPoisson = 1e-12;
constexpr double kTolPeriod = 1e-6;
constexpr double kTolEnergy = 1e-6;
constexpr double kRatioLo4 = 12.0, kRatioHi4 = 20.0;
constexpr double kTolGridError = 1e-3;
constexpr double kTolGridResidual = 1e-8;
constexpr double kTolConformalMap = 1e-8;
constexpr double kTolConformalField = 1e-4;
constexpr double kRatioLo2 = 3.5, kRatioHi2 = 4.5;
constexpr std::size_t kMinPairs = 100;
constexpr int kChanges = 10;
constexpr int kJets = 10;

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Worst relative error and pair count over a batch of verdicts.
struct Tally {
  bool pass = true;
  double worst = 0.0;
  std::size_t min_pairs = static_cast<std::size_t>(-1);
  std::vector<std::string> failures;

  void add(const std::string& what, const Verdict& v) {
    worst = std::max(worst, v.max_rel_err);
    min_pairs = std::min(min_pairs, v.pairs);
    if (!v.pass || v.pairs < kMinPairs) {
      pass = false;
      failures.push_back(what);
    }
  }
  std::string summary() const {
    std::string s = "worst rel err " + sci(worst) + ", min pairs " + std::to_string(min_pairs);
    for (const auto& f : failures) s += "; failed " + f;
    return s;
  }
};

struct Geometry {
  std::string label;
  Metric h;
  Metric phi;
  int p() const { return h.dim(); }
  int n() const { return phi.dim(); }
};

Metric conformal() {
  return catalog_metric("conformal2d", Factor::temporal, 2, parse("0.3*t1 - 0.2*t1*t2 + 0.1*sin(t2)"));
}

std::vector<Geometry> catalog() {
  return {
      {"exp1d/sphere", catalog_metric("exp1d", Factor::temporal, 1), catalog_metric("sphere", Factor::spatial, 2)},
      {"euclidean/hyperbolic", catalog_metric("euclidean", Factor::temporal, 1),
       catalog_metric("hyperbolic", Factor::spatial, 2)},
      {"conformal2d/sphere", conformal(), catalog_metric("sphere", Factor::spatial, 2)},
      {"euclidean2/euclidean3", catalog_metric("euclidean", Factor::temporal, 2),
       catalog_metric("euclidean", Factor::spatial, 3)},
  };
}

struct Suite {
  std::vector<ChangeMap> changes;
  std::vector<JetPoint> jets;
};

Suite suite_for(const std::string& stream, const Geometry& g, int jets = kJets) {
  const testkit::Setting s = testkit::setting(g.p(), g.n());
  return {testkit::changes(stream, s, kChanges), testkit::jets(stream, s, jets)};
}

double max_abs_diff(const NdArray& a, const NdArray& b) {
  double w = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) w = std::max(w, std::abs(a.data()[k] - b.data()[k]));
  return w;
}

double max_abs(const NdArray& a) {
  double w = 0.0;
  for (double d : a.data()) w = std::max(w, std::abs(d));
  return w;
}

MultiTimeSpray canonical(const Metric& h, const Metric& phi) {
  return {canonical_temporal(h, phi.dim()), canonical_spatial(phi, h.dim())};
}

// 1. C, L, J and the Hessian metric of the energy Lagrangian are d-tensors.
Outcome tensoriality() {
  Tally t;
  for (const Geometry& g : catalog()) {
    const Suite s = suite_for("acceptance/tensoriality/" + g.label, g);
    t.add(g.label + ":C", is_dtensor(liouville_c_field(g.p(), g.n()), s.changes, s.jets, kTolSymbolic));
    t.add(g.label + ":L", is_dtensor(liouville_l_field(g.h, g.n()), s.changes, s.jets, kTolSymbolic));
    t.add(g.label + ":J", is_dtensor(normalization_j_field(g.h, g.n()), s.changes, s.jets, kTolSymbolic));
    t.add(g.label + ":hessian",
          is_dtensor(lagrangian_metric_field(energy_lagrangian(g.h, g.phi), g.p(), g.n()), s.changes, s.jets,
                     kTolSymbolic));
  }
  return {t.pass, t.summary()};
}

// 2. Canonical sprays obey their laws and are not d-tensors.
Outcome spray_laws() {
  Tally t;
  bool negatives = true;
  std::string neg;
  auto run = [&](const std::string& label, const Spray& sp, const Suite& s) {
    t.add(label + ":law", check_spray_law(sp, s.changes, s.jets, kTolSymbolic));
    const Verdict v = is_dtensor(spray_as_dtensor(sp), s.changes, s.jets, kTolSymbolic);
    const bool ok = !v.pass && v.witness.has_value();
    negatives = negatives && ok;
    neg += " " + label + (ok ? " breaks (witness " + v.witness->change + ")" : " DID NOT BREAK");
  };
  const Metric exp1d = catalog_metric("exp1d", Factor::temporal, 1);
  for (const char* name : {"sphere", "hyperbolic"}) {
    const Metric phi = catalog_metric(name, Factor::spatial, 2);
    const Geometry g{std::string("exp1d/") + name, exp1d, phi};
    const Suite s = suite_for("acceptance/sprays/" + g.label, g);
    if (std::string(name) == "sphere") run("temporal(exp1d)", canonical_temporal(exp1d, 2), s);
    run(std::string("spatial(") + name + ")", canonical_spatial(phi, 1), s);
  }
  return {t.pass && negatives, t.summary() + ";" + neg};
}

// 3. Differences of sprays are d-tensors; spray = canonical + remainder.
Outcome decomposition() {
  const Metric h1 = catalog_metric("exp1d", Factor::temporal, 1);
  const Metric h2(Factor::temporal, {{parse("1 + 0.5*t1^2")}}, {}, "quadratic1d");
  const Metric phi = catalog_metric("sphere", Factor::spatial, 2);
  const Geometry g{"exp1d/sphere", h1, phi};
  const Suite s = suite_for("acceptance/decomposition", g);
  Tally t;
  const Spray H1 = canonical_temporal(h1, 2), H2 = canonical_temporal(h2, 2);
  t.add("difference", is_dtensor(spray_difference(H1, H2), s.changes, s.jets, kTolSymbolic));
  double split = 0.0;
  const Spray mixed_t = affine_combination(0.3, H1, H2);
  const Spray mixed_s = affine_combination(
      0.7, canonical_spatial(phi, 1), canonical_spatial(catalog_metric("hyperbolic", Factor::spatial, 2), 1));
  const DTensorField rt = decompose(mixed_t, h1, phi);
  const DTensorField rs = decompose(mixed_s, h1, phi);
  t.add("temporal_remainder", is_dtensor(rt, s.changes, s.jets, kTolSymbolic));
  t.add("spatial_remainder", is_dtensor(rs, s.changes, s.jets, kTolSymbolic));
  for (const JetPoint& u : s.jets) {
    NdArray a = mixed_t(u);
    const NdArray ct = H1(u), r1 = rt(u);
    for (std::size_t k = 0; k < a.data().size(); ++k) split = std::max(split, std::abs(a.data()[k] - ct.data()[k] - r1.data()[k]));
    a = mixed_s(u);
    const NdArray cs = canonical_spatial(phi, 1)(u), r2 = rs(u);
    for (std::size_t k = 0; k < a.data().size(); ++k) split = std::max(split, std::abs(a.data()[k] - cs.data()[k] - r2.data()[k]));
  }
  return {t.pass && split < kTolSplit, t.summary() + "; split residual " + sci(split)};
}

// 4. M = 2H both ways; spatial spray -> connection -> spray.
Outcome round_trips() {
  double temporal = 0.0, spatial = 0.0;
  int jets = 0;
  for (const Geometry& g : catalog()) {
    const MultiTimeSpray sp = canonical(g.h, g.phi);
    const NonlinearConnection conn = connection_from_sprays(sp, g.h);
    const MultiTimeSpray back = sprays_from_connection(conn);
    const NonlinearConnection again = connection_from_sprays(back, g.h);
    testkit::Setting set = testkit::setting(g.p(), g.n());
    Rng rng = Rng(testkit::kSeed).stream("acceptance/roundtrip/" + g.label);
    for (const JetPoint& u : sample_jets(rng, 20, set.t_box, set.x_box)) {
      const NdArray H = sp.temporal(u);
      temporal = std::max(temporal, max_abs_diff(back.temporal(u), H) / std::max(1.0, max_abs(H)));
      temporal = std::max(temporal, max_abs_diff(again(u).M, conn(u).M));
      const NdArray G = sp.spatial(u);
      spatial = std::max(spatial, max_abs_diff(back.spatial(u), G) / std::max(1.0, max_abs(G)));
      ++jets;
    }
  }
  // Multiplying and dividing by two is exact in binary floating point.
  const bool ok = temporal == 0.0 && spatial < kTolSpatialRoundTrip;
  return {ok, "temporal " + sci(temporal) + " (exact required), spatial " + sci(spatial) + " over " +
                  std::to_string(jets) + " jets"};
}

// 5. Adapted frame and coframe transform by the simple rules.
Outcome adapted_laws() {
  Tally t;
  for (const Geometry& g : catalog()) {
    const Suite s = suite_for("acceptance/adapted/" + g.label, g);
    const AdaptedVerdicts v = check_adapted_laws(canonical_connection(g.h, g.phi), s.changes, s.jets, kTolSymbolic);
    t.add(g.label + ":frame", v.frame);
    t.add(g.label + ":coframe", v.coframe);
  }
  return {t.pass, t.summary()};
}

// 6. Harmonic and Poisson residuals agree.
Outcome poisson_identity() {
  Rng rng = Rng(testkit::kSeed).stream("acceptance/poisson");
  const std::vector<Metric> hs{catalog_metric("euclidean", Factor::temporal, 2), conformal()};
  const std::vector<Metric> phis{catalog_metric("sphere", Factor::spatial, 2),
                                 catalog_metric("hyperbolic", Factor::spatial, 2),
                                 catalog_metric("euclidean", Factor::spatial, 2)};
  const std::vector<SmoothMap> maps{SmoothMap(2, {parse("1 + 0.2*t1 + 0.1*t2^2"), parse("1 + 0.3*t1*t2")}),
                                    SmoothMap(2, {parse("1.2 + 0.1*sin(t1 + t2)"), parse("0.8 + 0.2*cos(t1)*t2")})};
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Metric& h = hs[rng.below(hs.size())];
    const Metric& phi = phis[rng.below(phis.size())];
    const SmoothMap& f = maps[rng.below(maps.size())];
    MultiTimeSpray s = canonical(h, phi);
    s.spatial = affine_combination(rng.uniform(0.5, 1.5), s.spatial, zero_spray(SprayKind::spatial, 2, 2));
    s.temporal = affine_combination(rng.uniform(0.5, 1.5), s.temporal, zero_spray(SprayKind::temporal, 2, 2));
    const std::vector<double> t{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    const Eigen::VectorXd a = harmonic_residual(f, s, h, t);
    const Eigen::VectorXd b = poisson_residual(f, poisson_source(s, h), h, t);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  return {worst < kTolPoisson, "max |harmonic - poisson| " + sci(worst) + " over 50 tuples"};
}

/// Time at which phi(t) first reaches `target`, by Newton on the cubic
/// Hermite interpolant of the samples (value and velocity).
double crossing_time(const Trajectory& tr, int component, double target) {
  for (std::size_t k = 0; k + 1 < tr.t.size(); ++k) {
    const double y0 = tr.x[k](component) - target, y1 = tr.x[k + 1](component) - target;
    if (y0 > 0.0 || y1 < 0.0) continue;
    const double h = tr.t[k + 1] - tr.t[k];
    const double d0 = tr.v[k](component) * h, d1 = tr.v[k + 1](component) * h;
    auto value = [&](double s) {
      const double s2 = s * s, s3 = s2 * s;
      return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * d1;
    };
    auto slope = [&](double s) {
      const double s2 = s * s;
      return (6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * d0 + (-6 * s2 + 6 * s) * y1 + (3 * s2 - 2 * s) * d1;
    };
    double s = -y0 / (y1 - y0);
    for (int it = 0; it < 30; ++it) s -= value(s) / slope(s);
    return tr.t[k] + s * h;
  }
  return std::nan("");
}

// 7. Geodesics on the unit sphere.
Outcome geodesics() {
  const Metric sphere = catalog_metric("sphere", Factor::spatial, 2);
  const MultiTimeSpray s = canonical(catalog_metric("euclidean", Factor::temporal, 1), sphere);
  const double two_pi = 2 * M_PI;
  const double step = 1e-3;

  const Trajectory eq = solve_affine_ode(s, Eigen::Vector2d(M_PI / 2, 0.0), Eigen::Vector2d(0.0, 1.0), 0.0,
                                         two_pi + 0.1, step);
  const double period = crossing_time(eq, 1, two_pi);

  // Inclined great circle: energy along one period and the RK4 order.
  const double incl = 0.6;
  const Eigen::Vector2d x0(M_PI / 2, 0.0), v0(-std::sin(incl), std::cos(incl));
  const Trajectory tilted = solve_affine_ode(s, x0, v0, 0.0, two_pi + 0.1, step);
  const double tilted_period = crossing_time(tilted, 1, two_pi);
  double drift = 0.0;
  for (std::size_t k = 0; k < tilted.t.size() && tilted.t[k] <= two_pi + 1e-12; ++k)
    drift = std::max(drift, std::abs(tilted.v[k].dot(sphere.at(as_span(tilted.x[k])) * tilted.v[k]) - 1.0));

  auto closed = [&](double t) {
    return Eigen::Vector2d(std::acos(std::sin(incl) * std::sin(t)),
                           std::atan2(std::cos(incl) * std::sin(t), std::cos(t)));
  };
  auto error = [&](double h) {
    const Trajectory tr = solve_affine_ode(s, x0, v0, 0.0, 1.2, h);
    double w = 0.0;
    for (std::size_t k = 0; k < tr.t.size(); ++k) w = std::max(w, (tr.x[k] - closed(tr.t[k])).cwiseAbs().maxCoeff());
    return w;
  };
  const double ratio = error(0.1) / error(0.05);

  const bool ok = std::abs(period - two_pi) < kTolPeriod && std::abs(tilted_period - two_pi) < kTolPeriod &&
                  drift < kTolEnergy && ratio >= kRatioLo4 && ratio <= kRatioHi4;
  return {ok, "equator period error " + sci(std::abs(period - two_pi)) + ", inclined " +
                  sci(std::abs(tilted_period - two_pi)) + ", energy drift " + sci(drift) + ", step-halving ratio " +
                  sci(ratio)};
}

// 8. Dirichlet grid solver.
Outcome harmonic_grid() {
  const Metric flat2 = catalog_metric("euclidean", Factor::temporal, 2);
  const Metric hc = conformal();
  const Metric target = catalog_metric("euclidean", Factor::spatial, 1);
  const BoundaryData saddle = [](double a, double b) { return Eigen::VectorXd::Constant(1, a * a - b * b); };
  GridOptions o;
  o.m = 33;
  // Blending the boundary already reproduces t1^2 - t2^2, so start from zero.
  o.transfinite_guess = false;
  const GridMap g0 = solve_harmonic_grid(canonical(flat2, target), flat2, saddle, 1, o);
  const GridMap gc = solve_harmonic_grid(canonical(hc, target), hc, saddle, 1, o);

  double err = 0.0, same = 0.0;
  for (int a = 1; a + 1 < g0.m; ++a)
    for (int b = 1; b + 1 < g0.m; ++b) {
      err = std::max(err, std::abs(g0.at(a, b)(0) - (g0.t1(a) * g0.t1(a) - g0.t2(b) * g0.t2(b))));
      same = std::max(same, std::abs(g0.at(a, b)(0) - gc.at(a, b)(0)));
    }

  // Residual field of a fixed non-harmonic map into the sphere at 10 seeded
  // interior points: conformal h rescales it by exp(-2 lambda).
  const Metric sphere = catalog_metric("sphere", Factor::spatial, 2);
  const SmoothMap f(2, {parse("1.2 + 0.2*t1*t2 + 0.1*t1^2"), parse("0.3*t1 - 0.1*t2^2 + 0.2")});
  const Expr lambda = parse("0.3*t1 - 0.2*t1*t2 + 0.1*sin(t2)");
  const CompiledExpr lam(lambda, std::vector<std::string>{"t1", "t2"});
  Rng rng = Rng(testkit::kSeed).stream("acceptance/grid/conformal");
  double field = 0.0;
  for (int k = 0; k < 10; ++k) {
    const std::vector<double> t{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
    const Eigen::VectorXd r0 = harmonic_residual(f, canonical(flat2, sphere), flat2, t);
    const Eigen::VectorXd rc = harmonic_residual(f, canonical(hc, sphere), hc, t);
    const Eigen::VectorXd scaled = std::exp(-2 * lam(t)) * r0;
    field = std::max(field, (rc - scaled).cwiseAbs().maxCoeff() / std::max(1e-300, scaled.cwiseAbs().maxCoeff()));
  }

  const bool converged = g0.status == GridStatus::converged && gc.status == GridStatus::converged;
  const bool ok = converged && err < kTolGridError && g0.final_residual < kTolGridResidual &&
                  gc.final_residual < kTolGridResidual && same < kTolConformalMap && field < kTolConformalField;
  return {ok, std::string(converged ? "converged" : "NOT converged") + " (m=33, " + std::to_string(g0.iterations) +
                  " iterations), max interior error " + sci(err) + ", residual " + sci(g0.final_residual) +
                  ", conformal map change " + sci(same) + ", residual scaling rel err " + sci(field)};
}

// 9. Olver prolongation against the flow oracle.
Outcome prolongation() {
  const Geometry g{"exp1d/sphere", catalog_metric("exp1d", Factor::temporal, 1),
                   catalog_metric("sphere", Factor::spatial, 2)};
  const std::vector<std::pair<std::string, BaseVectorField>> fields{
      {"spatial_scaling", BaseVectorField(1, 2, {parse("0")}, {parse("x1"), parse("0")})},
      {"temporal_scaling", BaseVectorField(1, 2, {parse("t1 + 0.5*x2")}, {parse("0"), parse("0")})},
      {"nonlinear", BaseVectorField(1, 2, {parse("1 + 0.2*sin(x1)")},
                                    {parse("0.3*x1^2 - 0.2*t1*x2 + 0.1*cos(t1 + x1)"),
                                     parse("0.3*x2^2 - 0.2*t1*x1 + 0.1*cos(t1 + x2)")})},
  };
  const Suite s = suite_for("acceptance/prolong", g);
  const NonlinearConnection conn = canonical_connection(g.h, g.phi);
  double lo = 1e300, hi = 0.0;
  Tally t;
  for (const auto& [name, X] : fields) {
    for (const JetPoint& u : s.jets) {
      const double ratio = flow_prolong_check(X, u, 2e-2) / flow_prolong_check(X, u, 1e-2);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    t.add(name + ":gap", is_dtensor(vertical_gap_field(X, conn), s.changes, s.jets, kTolSymbolic));
  }
  const bool ok = t.pass && lo >= kRatioLo2 && hi <= kRatioHi2;
  return {ok, "eps-halving ratios in [" + sci(lo) + ", " + sci(hi) + "] over 3 fields x 10 jets; gap " + t.summary()};
}

// 10. The verify command is deterministic and flags the negative control.
Outcome cli_determinism() {
  auto run = [](const std::string& scenario, std::string& out) {
    const std::string path = std::string(JETFLOW_TEST_DATA_DIR) + "/" + scenario;
    const char* argv[] = {"jetflow", "verify", path.c_str()};
    std::ostringstream o, e;
    const int code = jetflow::cli::run_app(3, argv, o, e);
    out = o.str();
    return code;
  };
  std::string a, b, neg;
  const int ca = run("sphere_exp1d.json", a);
  const int cb = run("sphere_exp1d.json", b);
  const int cn = run("negative_control.json", neg);
  const bool ok = ca == 0 && cb == 0 && a == b && !a.empty() && cn != 0;
  return {ok, std::string(a == b ? "identical" : "DIFFERENT") + " reports (" + std::to_string(a.size()) +
                  " bytes), exit codes " + std::to_string(ca) + "/" + std::to_string(cb) + ", negative control exit " +
                  std::to_string(cn)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"tensoriality of C, L, J and the Hessian metric", tensoriality},
      {"spray laws and their negative controls", spray_laws},
      {"spray decomposition", decomposition},
      {"connection round trips", round_trips},
      {"adapted frame and coframe laws", adapted_laws},
      {"Poisson identity", poisson_identity},
      {"sphere geodesics", geodesics},
      {"harmonic grid solver", harmonic_grid},
      {"prolongation and flow oracle", prolongation},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << std::setw(2) << k + 1 << ' ' << criteria[k].first << ": "
              << o.detail << " (" << std::fixed << std::setprecision(2) << secs << " s)" << std::defaultfloat << '\n';
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? 0 : 1;
}
