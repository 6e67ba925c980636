#include "jetflow/numdiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jetflow {

bool box_contains(const Box& box, std::span<const double> point) {
  if (box.empty()) return true;
  if (box.size() != point.size()) return false;
  for (std::size_t k = 0; k < box.size(); ++k)
    if (!box[k].contains(point[k])) return false;
  return true;
}

namespace numdiff {

double fd_partial(const ScalarField& f, std::span<const double> point, std::size_t index) {
  static const double kStep = std::cbrt(std::numeric_limits<double>::epsilon());
  std::vector<double> p(point.begin(), point.end());
  const double h = kStep * std::max(1.0, std::abs(p[index]));
  const double x0 = p[index];
  p[index] = x0 + h;
  const double fp = f(p);
  p[index] = x0 - h;
  const double fm = f(p);
  return (fp - fm) / (2.0 * h);
}

double second_partial(const ScalarField& f, std::span<const double> point, std::size_t i, std::size_t j) {
  static const double kStep = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  std::vector<double> p(point.begin(), point.end());
  const double hi = kStep * std::max(1.0, std::abs(p[i]));
  const double hj = kStep * std::max(1.0, std::abs(p[j]));
  auto at = [&](double di, double dj) {
    std::vector<double> q = p;
    q[i] += di;
    q[j] += dj;
    return f(q);
  };
  if (i == j) return (at(hi, 0) - 2.0 * f(p) + at(-hi, 0)) / (hi * hi);
  return (at(hi, hj) - at(hi, -hj) - at(-hi, hj) + at(-hi, -hj)) / (4.0 * hi * hj);
}

double second_partial(const Expr& f, std::span<const std::string> variables, std::span<const double> point,
                      std::size_t i, std::size_t j) {
  Expr d = diff(diff(f, variables[i]), variables[j]);
  return CompiledExpr(d, variables)(point);
}

}  // namespace numdiff

namespace {

void require_only(const std::vector<Expr>& exprs, const std::vector<std::string>& allowed, const char* what) {
  for (const Expr& e : exprs)
    for (const std::string& v : variables_of(e))
      if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
        throw std::invalid_argument(std::string(what) + " references '" + v +
                                    "'; coordinate changes must have product form");
}

std::vector<std::vector<Expr>> jacobian_exprs(const std::vector<Expr>& f, const std::vector<std::string>& vars) {
  std::vector<std::vector<Expr>> out(f.size());
  for (std::size_t a = 0; a < f.size(); ++a)
    for (const auto& v : vars) out[a].push_back(diff(f[a], v));
  return out;
}

Eigen::MatrixXd eval_matrix(const std::vector<std::vector<CompiledExpr>>& m, std::span<const double> at) {
  const auto rows = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd out(rows, rows);
  for (Eigen::Index a = 0; a < rows; ++a)
    for (Eigen::Index b = 0; b < rows; ++b) out(a, b) = m[a][b](at);
  return out;
}

}  // namespace

ChangeMap::ChangeMap(std::string name, std::vector<Expr> forward_t, std::vector<Expr> forward_x,
                     std::vector<Expr> inverse_t, std::vector<Expr> inverse_x, Box domain_t, Box domain_x) {
  if (forward_t.size() != inverse_t.size() || forward_x.size() != inverse_x.size())
    throw std::invalid_argument("ChangeMap: forward and inverse dimensions differ");
  if (forward_t.empty() || forward_x.empty()) throw std::invalid_argument("ChangeMap: empty block");
  auto impl = std::make_shared<Impl>();
  impl->name = std::move(name);
  impl->p = static_cast<int>(forward_t.size());
  impl->n = static_cast<int>(forward_x.size());
  const auto tn = temporal_names(impl->p);
  const auto xn = spatial_names(impl->n);
  require_only(forward_t, tn, "temporal component");
  require_only(inverse_t, tn, "inverse temporal component");
  require_only(forward_x, xn, "spatial component");
  require_only(inverse_x, xn, "inverse spatial component");
  if (!domain_t.empty() && domain_t.size() != forward_t.size()) throw std::invalid_argument("ChangeMap: temporal box size");
  if (!domain_x.empty() && domain_x.size() != forward_x.size()) throw std::invalid_argument("ChangeMap: spatial box size");

  impl->forward_t = std::move(forward_t);
  impl->forward_x = std::move(forward_x);
  impl->inverse_t = std::move(inverse_t);
  impl->inverse_x = std::move(inverse_x);
  impl->domain_t = std::move(domain_t);
  impl->domain_x = std::move(domain_x);
  impl->dt_e = jacobian_exprs(impl->forward_t, tn);
  impl->dx_e = jacobian_exprs(impl->forward_x, xn);
  impl->idt_e = jacobian_exprs(impl->inverse_t, tn);
  impl->idx_e = jacobian_exprs(impl->inverse_x, xn);

  auto compile = [](const std::vector<Expr>& f, const std::vector<std::vector<Expr>>& jac,
                    const std::vector<std::string>& vars, bool second) {
    Compiled c;
    for (std::size_t a = 0; a < f.size(); ++a) {
      c.value.emplace_back(f[a], vars);
      c.first.emplace_back();
      if (second) c.second.emplace_back();
      for (std::size_t b = 0; b < vars.size(); ++b) {
        c.first[a].emplace_back(jac[a][b], vars);
        if (second) {
          c.second[a].emplace_back();
          for (std::size_t d = 0; d < vars.size(); ++d) c.second[a][b].emplace_back(diff(jac[a][b], vars[d]), vars);
        }
      }
    }
    return c;
  };
  impl->ft = compile(impl->forward_t, impl->dt_e, tn, true);
  impl->fx = compile(impl->forward_x, impl->dx_e, xn, true);
  impl->it = compile(impl->inverse_t, impl->idt_e, tn, false);
  impl->ix = compile(impl->inverse_x, impl->idx_e, xn, false);
  impl_ = std::move(impl);
}

ChangeMap ChangeMap::identity(int p, int n) {
  std::vector<Expr> t, x;
  for (const auto& s : temporal_names(p)) t.push_back(Expr::variable(s));
  for (const auto& s : spatial_names(n)) x.push_back(Expr::variable(s));
  return ChangeMap("identity", t, x, t, x);
}

bool ChangeMap::contains(std::span<const double> t, std::span<const double> x) const {
  return box_contains(impl_->domain_t, t) && box_contains(impl_->domain_x, x);
}

namespace {
Eigen::VectorXd eval_vector(const std::vector<CompiledExpr>& f, std::span<const double> at) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(f.size()));
  for (std::size_t a = 0; a < f.size(); ++a) out(static_cast<Eigen::Index>(a)) = f[a](at);
  return out;
}
std::vector<Eigen::MatrixXd> eval_second(const std::vector<std::vector<std::vector<CompiledExpr>>>& s,
                                         std::span<const double> at) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& block : s) out.push_back(eval_matrix(block, at));
  return out;
}
}  // namespace

Eigen::VectorXd ChangeMap::map_t(std::span<const double> t) const { return eval_vector(impl_->ft.value, t); }
Eigen::VectorXd ChangeMap::map_x(std::span<const double> x) const { return eval_vector(impl_->fx.value, x); }
Eigen::VectorXd ChangeMap::unmap_t(std::span<const double> t) const { return eval_vector(impl_->it.value, t); }
Eigen::VectorXd ChangeMap::unmap_x(std::span<const double> x) const { return eval_vector(impl_->ix.value, x); }
Eigen::MatrixXd ChangeMap::dt(std::span<const double> t) const { return eval_matrix(impl_->ft.first, t); }
Eigen::MatrixXd ChangeMap::dx(std::span<const double> x) const { return eval_matrix(impl_->fx.first, x); }
Eigen::MatrixXd ChangeMap::inverse_dt(std::span<const double> t) const { return eval_matrix(impl_->it.first, t); }
Eigen::MatrixXd ChangeMap::inverse_dx(std::span<const double> x) const { return eval_matrix(impl_->ix.first, x); }
std::vector<Eigen::MatrixXd> ChangeMap::ddt(std::span<const double> t) const { return eval_second(impl_->ft.second, t); }
std::vector<Eigen::MatrixXd> ChangeMap::ddx(std::span<const double> x) const { return eval_second(impl_->fx.second, x); }

ChangeMap ChangeMap::inverted(Box domain_t, Box domain_x) const {
  return ChangeMap(impl_->name + "^-1", impl_->inverse_t, impl_->inverse_x, impl_->forward_t, impl_->forward_x,
                   std::move(domain_t), std::move(domain_x));
}

const ChangeMap& ChangeMap::inverse() const {
  std::call_once(impl_->inverse_once, [this] { impl_->inverse = std::make_unique<ChangeMap>(inverted()); });
  return *impl_->inverse;
}

ChangeMap compose(const ChangeMap& outer, const ChangeMap& inner, std::string name) {
  if (outer.p() != inner.p() || outer.n() != inner.n()) throw std::invalid_argument("compose: dimension mismatch");
  auto subst_from = [](const std::vector<std::string>& names, const std::vector<Expr>& values) {
    Substitution s;
    for (std::size_t k = 0; k < names.size(); ++k) s.emplace(names[k], values[k]);
    return s;
  };
  const auto tn = temporal_names(inner.p());
  const auto xn = spatial_names(inner.n());
  auto apply_all = [](const std::vector<Expr>& f, const Substitution& s) {
    std::vector<Expr> out;
    for (const Expr& e : f) out.push_back(substitute(e, s));
    return out;
  };
  auto ft = apply_all(outer.forward_t(), subst_from(tn, inner.forward_t()));
  auto fx = apply_all(outer.forward_x(), subst_from(xn, inner.forward_x()));
  auto it = apply_all(inner.inverse_t(), subst_from(tn, outer.inverse_t()));
  auto ix = apply_all(inner.inverse_x(), subst_from(xn, outer.inverse_x()));
  if (name.empty()) name = outer.name() + "*" + inner.name();
  return ChangeMap(std::move(name), ft, fx, it, ix, inner.domain_t(), inner.domain_x());
}

namespace {
void require_regular(const Eigen::MatrixXd& m, const char* what) {
  if (!(std::abs(m.determinant()) >= 1e-12)) throw ChartError(std::string("singular ") + what + " Jacobian block");
}
}  // namespace

JacobianBlocks jacobian_blocks(const ChangeMap& c, std::span<const double> t, std::span<const double> x) {
  if (!c.contains(t, x)) throw ChartError("point outside the domain of change '" + c.name() + "'");
  JacobianBlocks b;
  b.temporal = c.dt(t);
  b.spatial = c.dx(x);
  require_regular(b.temporal, "temporal");
  require_regular(b.spatial, "spatial");
  const Eigen::VectorXd tt = c.map_t(t);
  const Eigen::VectorXd xt = c.map_x(x);
  b.temporal_inverse = c.inverse_dt(as_span(tt));
  b.spatial_inverse = c.inverse_dx(as_span(xt));
  require_regular(b.temporal_inverse, "inverse temporal");
  require_regular(b.spatial_inverse, "inverse spatial");
  return b;
}

ChangeDiagnostics diagnose(const ChangeMap& c, std::span<const Eigen::VectorXd> t_samples,
                           std::span<const Eigen::VectorXd> x_samples) {
  ChangeDiagnostics d;
  const std::size_t count = std::min(t_samples.size(), x_samples.size());
  for (std::size_t k = 0; k < count; ++k) {
    const auto t = as_span(t_samples[k]);
    const auto x = as_span(x_samples[k]);
    JacobianBlocks b = jacobian_blocks(c, t, x);
    Eigen::VectorXd tt = c.map_t(t);
    Eigen::VectorXd xt = c.map_x(x);
    d.roundtrip_error = std::max(d.roundtrip_error, (c.unmap_t(as_span(tt)) - t_samples[k]).cwiseAbs().maxCoeff());
    d.roundtrip_error = std::max(d.roundtrip_error, (c.unmap_x(as_span(xt)) - x_samples[k]).cwiseAbs().maxCoeff());
    const auto ip = Eigen::MatrixXd::Identity(c.p(), c.p());
    const auto in = Eigen::MatrixXd::Identity(c.n(), c.n());
    d.jacobian_product_error =
        std::max(d.jacobian_product_error, (b.temporal * b.temporal_inverse - ip).cwiseAbs().maxCoeff());
    d.jacobian_product_error =
        std::max(d.jacobian_product_error, (b.spatial * b.spatial_inverse - in).cwiseAbs().maxCoeff());
  }
  return d;
}

}  // namespace jetflow
