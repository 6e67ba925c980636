#pragma once

// Points of the first jet bundle and the coordinate changes induced on it by
// product-form changes of T x M.

#include <Eigen/Dense>

#include <vector>

#include "jetflow/ndarray.hpp"
#include "jetflow/numdiff.hpp"

namespace jetflow {

/// (t^a, x^i, x^i_a). The jet block v is n x p: row i, column a.
struct JetPoint {
  Eigen::VectorXd t;
  Eigen::VectorXd x;
  Eigen::MatrixXd v;

  int p() const { return static_cast<int>(t.size()); }
  int n() const { return static_cast<int>(x.size()); }
  int dim() const { return p() + n() + p() * n(); }

  /// Throws std::invalid_argument on inconsistent shapes or non-finite data.
  void check() const;

  /// Values in the order of jet_names(p, n).
  std::vector<double> flatten() const;
  static JetPoint unflatten(int p, int n, std::span<const double> values);
};

/// Index of x^i_a in the flattened coordinate list.
inline int jet_coordinate(int p, int n, int i, int a) { return p + n + i * p + a; }

/// Everything about a jet coordinate change at one point.
struct JetChange {
  JacobianBlocks blocks;
  JetPoint image;
  /// d x~^j_b / d t^a, shape (n, p, p) indexed (j, b, a).
  NdArray dv_dt;
  /// d x~^j_b / d x^i, shape (n, p, n) indexed (j, b, i).
  NdArray dv_dx;
};

/// x~^i_a = (d x~^i / d x^j)(d t^b / d t~^a) x^j_b, with the derivatives of
/// that rule with respect to the base coordinates.
JetChange jet_change(const ChangeMap& c, const JetPoint& u);

JetPoint transform_jet(const ChangeMap& c, const JetPoint& u);

/// Square matrix F with d/dz^a = F(a, b) d/dz~^b over the natural frame
/// {d/dt, d/dx, d/dx_a}; F is the transpose of the jet Jacobian.
Eigen::MatrixXd natural_frame_change(const ChangeMap& c, const JetPoint& u);

/// Square matrix C with dz^a = C(a, b) dz~^b, assembled from the inverse
/// change evaluated at the image jet.
Eigen::MatrixXd natural_coframe_change(const ChangeMap& c, const JetPoint& u);

/// Maps every base jet coordinate name (t*, x*, x*_*) to its expression in
/// the tilde coordinates of `c`, using the same names for the tilde side.
Substitution jet_substitution(const ChangeMap& c);

}  // namespace jetflow
