#pragma once

// Affine and harmonic maps T -> M of a multi-time spray: residuals, the
// Poisson form, an RK4 integrator for dim T = 1 and a grid relaxation solver
// for dim T = 2.

#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "jetflow/expr.hpp"
#include "jetflow/geometry.hpp"
#include "jetflow/jet.hpp"
#include "jetflow/spray.hpp"

namespace jetflow {

/// x^i(t) given by n expressions over t1..tp, with exact derivatives.
class SmoothMap {
 public:
  SmoothMap(int p, std::vector<Expr> components, Box domain = {});

  int p() const { return p_; }
  int n() const { return static_cast<int>(components_.size()); }
  const std::vector<Expr>& components() const { return components_; }
  const Box& domain() const { return domain_; }

  Eigen::VectorXd value(std::span<const double> t) const;
  /// d x^i / d t^a, n x p.
  Eigen::MatrixXd first(std::span<const double> t) const;
  /// d^2 x^i / d t^a d t^b, shape (n, p, p).
  NdArray second(std::span<const double> t) const;

 private:
  int p_;
  std::vector<Expr> components_;
  Box domain_;
  std::vector<CompiledExpr> value_c_;
  std::vector<std::vector<CompiledExpr>> first_c_;
  std::vector<std::vector<std::vector<CompiledExpr>>> second_c_;
};

/// (t, f(t), df/dt). Throws ChartError outside the map's domain.
JetPoint jet_lift(const SmoothMap& f, std::span<const double> t);

/// x_ab + G_(a)b + G_(b)a + H_(a)b + H_(b)a at the lift of f; shape (n, p, p).
NdArray affine_residual(const SmoothMap& f, const MultiTimeSpray& s, std::span<const double> t);

/// h^{ab} (x_ab + 2 G_(a)b + 2 H_(a)b) from a jet and its second derivatives.
Eigen::VectorXd harmonic_residual(const JetPoint& u, const NdArray& second, const MultiTimeSpray& s, const Metric& h);
Eigen::VectorXd harmonic_residual(const SmoothMap& f, const MultiTimeSpray& s, const Metric& h,
                                  std::span<const double> t);

/// S_(a)b = G_(a)b + H_(a)b + 1/2 H^g_ab x_g and its h-trace S^i.
struct PoissonSource {
  std::function<NdArray(const JetPoint&)> components;
  std::function<Eigen::VectorXd(const JetPoint&)> trace;
};

PoissonSource poisson_source(const MultiTimeSpray& s, const Metric& h);

/// Delta_h x + 2 S with Delta_h x = h^{ab}(x_ab - H^g_ab x_g).
Eigen::VectorXd poisson_residual(const SmoothMap& f, const PoissonSource& source, const Metric& h,
                                 std::span<const double> t);

struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> v;
};

/// Thrown when the spray cannot be evaluated mid-integration.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time_reached, Trajectory partial)
      : std::runtime_error(what), time_reached(time_reached), partial(std::move(partial)) {}
  double time_reached;
  Trajectory partial;
};

/// Classical RK4 for x'' + 2G + 2H = 0 (p = 1) from t0 to t1 with the given
/// step; the last step is shortened to land on t1.
Trajectory solve_affine_ode(const MultiTimeSpray& s, const Eigen::VectorXd& x0, const Eigen::VectorXd& v0, double t0,
                            double t1, double step);

struct GridOptions {
  int m = 33;                 // nodes per side, including the boundary
  double t1_lo = 0.0, t1_hi = 1.0;
  double t2_lo = 0.0, t2_hi = 1.0;
  double damping = 0.8;
  int max_iters = 200000;
  double tol = 1e-10;
  int workers = 1;
  bool transfinite_guess = true;  // else the interior starts at zero
};

enum class GridStatus { converged, max_iters, diverged };

/// Node (a, b) sits at t1 = t1_lo + a h1, t2 = t2_lo + b h2.
struct GridMap {
  int m = 0;
  int n = 0;
  GridOptions options;
  std::vector<Eigen::VectorXd> values;     // index a * m + b
  std::vector<double> residual;            // max-norm of the discrete residual per node
  GridStatus status = GridStatus::max_iters;
  int iterations = 0;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  std::vector<std::pair<int, double>> log;  // (iteration, max interior residual)

  double t1(int a) const;
  double t2(int b) const;
  const Eigen::VectorXd& at(int a, int b) const { return values[static_cast<std::size_t>(a * m + b)]; }
};

using BoundaryData = std::function<Eigen::VectorXd(double t1, double t2)>;

/// Damped Jacobi on the centrally differenced harmonic system with lagged
/// spray terms and Dirichlet data. Requires h^{11} + h^{22} > 0 at the nodes.
/// Results do not depend on `workers`.
GridMap solve_harmonic_grid(const MultiTimeSpray& s, const Metric& h, const BoundaryData& boundary, int n,
                            const GridOptions& options);

/// CSV: header then one row per sample, columns t.., x.., residual.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr, std::span<const double> residual);
void write_grid_csv(std::ostream& os, const GridMap& g);

}  // namespace jetflow
