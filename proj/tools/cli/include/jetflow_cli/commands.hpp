#pragma once

// Solver commands behind the command-line tool.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "jetflow/maps.hpp"
#include "jetflow/prolong.hpp"
#include "jetflow_cli/scenario.hpp"

namespace jetflow::cli {

struct GeodesicRequest {
  Eigen::VectorXd x0;
  Eigen::VectorXd v0;
  double t0 = 0.0;
  double tmax = 1.0;
  double step = 1e-2;
};

struct GeodesicResult {
  Trajectory trajectory;
  std::vector<double> residual;  // max-norm harmonic residual per sample
};

/// Integrates the canonical sprays of the scenario (p = 1). The residual
/// column uses second derivatives differenced from the sampled velocities.
GeodesicResult run_geodesic(const Scenario& s, const GeodesicRequest& req);
void write_geodesic(std::ostream& os, const GeodesicResult& g, std::string_view format);

struct HarmonicRequest {
  GridOptions options;
  std::vector<Expr> boundary;  // one expression over t1, t2 per component
};

/// Boundary presets: linear, saddle (t1^2 - t2^2), cubic; else ';'-separated
/// expressions, one per spatial component. A single preset or expression is
/// used for every component.
std::vector<Expr> parse_boundary(std::string_view text, int n);

GridMap run_harmonic(const Scenario& s, const HarmonicRequest& req);
void write_harmonic(std::ostream& os, const GridMap& g, std::string_view format);
void write_convergence_log(std::ostream& os, const GridMap& g);

/// p + n comma-separated expressions, temporal components first.
BaseVectorField parse_field(std::string_view text, int p, int n);

/// Prolongation, horizontal lift through the canonical connection, their
/// gap and the flow-oracle discrepancies at eps and eps / 2.
nlohmann::json prolong_report(const Scenario& s, const BaseVectorField& X, const JetPoint& u, double eps);

}  // namespace jetflow::cli
