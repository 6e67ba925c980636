#pragma once

// Semi-Riemannian metrics on the temporal factor T and the spatial factor M.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jetflow/expr.hpp"
#include "jetflow/ndarray.hpp"
#include "jetflow/numdiff.hpp"

namespace jetflow {

enum class Factor { temporal, spatial };

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Symmetric nondegenerate matrix of expressions over t1..tp (temporal) or
/// x1..xn (spatial).
class Metric {
 public:
  using DomainTest = std::function<bool(std::span<const double>)>;

  /// `components` must be square. Symmetry and nondegeneracy are checked
  /// numerically by validate(). Points outside `domain` are rejected.
  Metric(Factor factor, std::vector<std::vector<Expr>> components, Box domain = {}, std::string name = {});

  Factor factor() const { return impl_->factor; }
  int dim() const { return impl_->dim; }
  const std::string& name() const { return impl_->name; }
  const std::vector<std::vector<Expr>>& components() const { return impl_->g; }
  const std::vector<std::string>& variables() const { return impl_->vars; }
  const Box& box() const { return impl_->box; }

  bool contains(std::span<const double> point) const;

  /// g(point). Throws MetricError outside the domain.
  Eigen::MatrixXd at(std::span<const double> point) const;
  /// dg(point)[c](a, b) = d g_ab / d coordinate c.
  std::vector<Eigen::MatrixXd> derivatives_at(std::span<const double> point) const;

  /// Throws MetricError if some sample is asymmetric or degenerate.
  void validate(std::span<const Eigen::VectorXd> samples) const;

  /// The same metric expressed in the tilde chart of `c` (its own block).
  Metric pullback(const ChangeMap& c) const;

  /// Cofactor inverse as expressions; dim <= 3.
  std::vector<std::vector<Expr>> inverse_components() const;

 private:
  struct Impl {
    Factor factor;
    int dim = 0;
    std::string name;
    std::vector<std::string> vars;
    std::vector<std::vector<Expr>> g;
    Box box;
    DomainTest domain;
    std::vector<std::vector<CompiledExpr>> g_c;
    std::vector<std::vector<std::vector<CompiledExpr>>> dg_c;  // [a][b][c]
  };
  explicit Metric(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  static std::shared_ptr<Impl> build(Factor factor, std::vector<std::vector<Expr>> components, std::string name);
  std::shared_ptr<const Impl> impl_;
};

/// Inverse metric at a point; throws MetricError if |det| <= 1e-12.
Eigen::MatrixXd metric_inverse(const Metric& g, std::span<const double> point);

/// Christoffel symbols Gamma^a_bc stored with shape (d, d, d) in (a, b, c).
NdArray christoffel(const Metric& g, std::span<const double> point);

/// Christoffel symbols from already evaluated g, g^{-1} and dg.
NdArray christoffel(const Eigen::MatrixXd& g_inverse, std::span<const Eigen::MatrixXd> dg);

/// Catalog metrics:
///   euclidean        identity, any dim
///   sphere           dim 2, diag(1, sin^2 x1), x1 in [0.2, pi - 0.2]
///   hyperbolic       dim 2, diag(1/x2^2, 1/x2^2), x2 >= 0.1
///   exp1d            dim 1, e^{2 v1}
///   conformal2d      dim 2, e^{2 lambda} delta with lambda an expression
/// The variable names follow the factor (t* or x*).
Metric catalog_metric(std::string_view name, Factor factor, int dim, const Expr& lambda = Expr());

}  // namespace jetflow
