#pragma once

// Central-difference derivatives and product-form coordinate changes on
// T x M together with their Jacobian blocks.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "jetflow/expr.hpp"

namespace jetflow {

struct Interval {
  double lo;
  double hi;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Per-coordinate intervals. An empty box is unbounded.
using Box = std::vector<Interval>;

bool box_contains(const Box& box, std::span<const double> point);

using ScalarField = std::function<double(std::span<const double>)>;

namespace numdiff {

/// (f(p + h e) - f(p - h e)) / 2h with h = eps^(1/3) max(1, |p_index|).
double fd_partial(const ScalarField& f, std::span<const double> point, std::size_t index);

/// Nested central differences with h = eps^(1/4) max(1, |p_k|).
double second_partial(const ScalarField& f, std::span<const double> point, std::size_t i, std::size_t j);

/// Exact second partial of an expression; `variables` names the point's
/// coordinates in order.
double second_partial(const Expr& f, std::span<const std::string> variables, std::span<const double> point,
                      std::size_t i, std::size_t j);

}  // namespace numdiff

/// Thrown when a Jacobian block is singular or a point lies outside a chart.
class ChartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A change of coordinates (t, x) -> (t~(t), x~(x)) with explicit inverse.
///
/// Forward and inverse components are expressions over t1..tp (temporal
/// block) and x1..xn (spatial block); for the inverse those names denote the
/// tilde coordinates. Symbolic first and second derivatives are prepared once
/// at construction.
class ChangeMap {
 public:
  ChangeMap(std::string name, std::vector<Expr> forward_t, std::vector<Expr> forward_x, std::vector<Expr> inverse_t,
            std::vector<Expr> inverse_x, Box domain_t = {}, Box domain_x = {});

  static ChangeMap identity(int p, int n);

  const std::string& name() const { return impl_->name; }
  int p() const { return impl_->p; }
  int n() const { return impl_->n; }
  const std::vector<Expr>& forward_t() const { return impl_->forward_t; }
  const std::vector<Expr>& forward_x() const { return impl_->forward_x; }
  const std::vector<Expr>& inverse_t() const { return impl_->inverse_t; }
  const std::vector<Expr>& inverse_x() const { return impl_->inverse_x; }
  const Box& domain_t() const { return impl_->domain_t; }
  const Box& domain_x() const { return impl_->domain_x; }

  bool contains(std::span<const double> t, std::span<const double> x) const;

  Eigen::VectorXd map_t(std::span<const double> t) const;
  Eigen::VectorXd map_x(std::span<const double> x) const;
  Eigen::VectorXd unmap_t(std::span<const double> t_tilde) const;
  Eigen::VectorXd unmap_x(std::span<const double> x_tilde) const;

  /// d t~^a / d t^b at t.
  Eigen::MatrixXd dt(std::span<const double> t) const;
  /// d x~^i / d x^j at x.
  Eigen::MatrixXd dx(std::span<const double> x) const;
  /// d t^a / d t~^b at t~ (from the inverse expressions).
  Eigen::MatrixXd inverse_dt(std::span<const double> t_tilde) const;
  Eigen::MatrixXd inverse_dx(std::span<const double> x_tilde) const;
  /// d^2 t~^a / d t^b d t^c, returned as [a](b, c).
  std::vector<Eigen::MatrixXd> ddt(std::span<const double> t) const;
  std::vector<Eigen::MatrixXd> ddx(std::span<const double> x) const;

  /// Swaps forward and inverse. The inverse has an unbounded domain unless
  /// boxes are supplied.
  ChangeMap inverted(Box domain_t = {}, Box domain_x = {}) const;
  /// inverted() with unbounded domain, built once and cached.
  const ChangeMap& inverse() const;

  /// Expressions for d t~^a / d t^b, d x~^i / d x^j and their inverses.
  const std::vector<std::vector<Expr>>& dt_exprs() const { return impl_->dt_e; }
  const std::vector<std::vector<Expr>>& dx_exprs() const { return impl_->dx_e; }
  const std::vector<std::vector<Expr>>& inverse_dt_exprs() const { return impl_->idt_e; }
  const std::vector<std::vector<Expr>>& inverse_dx_exprs() const { return impl_->idx_e; }

 private:
  struct Compiled {
    std::vector<CompiledExpr> value;                  // [a]
    std::vector<std::vector<CompiledExpr>> first;     // [a][b]
    std::vector<std::vector<std::vector<CompiledExpr>>> second;  // [a][b][c]
  };
  struct Impl {
    std::string name;
    int p = 0;
    int n = 0;
    std::vector<Expr> forward_t, forward_x, inverse_t, inverse_x;
    Box domain_t, domain_x;
    std::vector<std::vector<Expr>> dt_e, dx_e, idt_e, idx_e;
    Compiled ft, fx, it, ix;
    mutable std::once_flag inverse_once;
    mutable std::unique_ptr<ChangeMap> inverse;
  };
  std::shared_ptr<const Impl> impl_;
};

/// outer o inner, built by expression substitution. Domain is inner's.
ChangeMap compose(const ChangeMap& outer, const ChangeMap& inner, std::string name = {});

struct JacobianBlocks {
  Eigen::MatrixXd temporal;          // d t~ / d t  (p x p)
  Eigen::MatrixXd spatial;           // d x~ / d x  (n x n)
  Eigen::MatrixXd temporal_inverse;  // d t / d t~ at the image point
  Eigen::MatrixXd spatial_inverse;   // d x / d x~ at the image point
};

/// Throws ChartError when the point is outside the domain or a block has
/// |det| < 1e-12.
JacobianBlocks jacobian_blocks(const ChangeMap& c, std::span<const double> t, std::span<const double> x);

/// Largest deviation found over the sample points: of inverse o forward from
/// the identity, and of J * J^{-1} from the identity. Throws ChartError on a
/// singular block.
struct ChangeDiagnostics {
  double roundtrip_error = 0.0;
  double jacobian_product_error = 0.0;
};
ChangeDiagnostics diagnose(const ChangeMap& c, std::span<const Eigen::VectorXd> t_samples,
                           std::span<const Eigen::VectorXd> x_samples);

inline std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace jetflow
