#pragma once

// Total derivatives, the first prolongation of vector fields on T x M, the
// horizontal lift through a nonlinear connection and their difference.

#include <functional>
#include <string>
#include <vector>

#include "jetflow/connection.hpp"
#include "jetflow/dtensor.hpp"
#include "jetflow/expr.hpp"
#include "jetflow/jet.hpp"

namespace jetflow {

/// X = X^a d/dt^a + X^i d/dx^i with components over t1..tp, x1..xn.
struct BaseVectorField {
  int p = 0;
  int n = 0;
  std::vector<Expr> temporal;  // X^a
  std::vector<Expr> spatial;   // X^i

  BaseVectorField(int p, int n, std::vector<Expr> temporal, std::vector<Expr> spatial);

  /// The same field written in the tilde chart of a product-form change.
  BaseVectorField pushforward(const ChangeMap& c) const;
  /// (X^a, X^i) at a base point.
  Eigen::VectorXd at(std::span<const double> t, std::span<const double> x) const;
};

BaseVectorField operator+(const BaseVectorField& a, const BaseVectorField& b);
BaseVectorField operator*(double s, const BaseVectorField& a);

/// Components of a tangent vector to the jet bundle at one jet.
struct JetVector {
  Eigen::VectorXd t;
  Eigen::VectorXd x;
  Eigen::MatrixXd v;  // n x p
};

struct JetVectorField {
  int p = 0;
  int n = 0;
  std::function<JetVector(const JetPoint&)> eval;
  JetVector operator()(const JetPoint& u) const { return eval(u); }
};

/// D_a f as an expression over jet coordinates: df/dt^a + (df/dx^i) x^i_a.
Expr total_derivative_expr(const Expr& f, int p, int n, int alpha);

/// D_a f at u; f may use t, x and jet variables (jet terms are ignored by
/// the formula, which is exact for functions on T x M).
double total_derivative(const Expr& f, const JetPoint& u, int alpha);

/// delta f / delta t^a + (delta f / delta x^i) x^i_a.
double total_derivative_adapted(const Expr& f, const NonlinearConnection& g, const JetPoint& u, int alpha);

/// (D_a f) as an "L(a)" field.
DTensorField total_derivative_field(const Expr& f, int p, int n);

/// X^(i)_(a) = D_a X^i - (D_a X^b) x^i_b, as expressions over jet coordinates,
/// shape n x p.
std::vector<std::vector<Expr>> olver_vertical_exprs(const BaseVectorField& X);

JetVectorField olver_prolong(const BaseVectorField& X);

/// Vertical part of X^H: -(M^(j)_(b)a X^a + N^(j)_(b)i X^i).
JetVectorField horizontal_lift(const BaseVectorField& X, const NonlinearConnection& g);

/// pr X - X^H, an n x p array (vertical components only).
Eigen::MatrixXd vertical_gap(const BaseVectorField& X, const NonlinearConnection& g, const JetPoint& u);

/// vertical_gap as a "U(i,a)" field.
DTensorField vertical_gap_field(const BaseVectorField& X, const NonlinearConnection& g);

struct FlowCheckOptions {
  int substeps = 16;
  double jacobian_step = 1e-4;
};

/// Flows (t, x) along X for times +-eps by RK4, transports the jet through
/// the flow maps (Jacobians by central differences over flowed neighbours),
/// central-differences in eps and returns the largest absolute deviation
/// from olver_prolong(X)(u) over all components.
double flow_prolong_check(const BaseVectorField& X, const JetPoint& u, double eps, const FlowCheckOptions& opts = {});

/// Jet transported by the time-s flow of X (exposed for testing).
JetPoint flow_jet(const BaseVectorField& X, const JetPoint& u, double s, const FlowCheckOptions& opts = {});

}  // namespace jetflow
