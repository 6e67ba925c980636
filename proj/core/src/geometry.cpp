#include "jetflow/geometry.hpp"

#include <cmath>
#include <numbers>

namespace jetflow {

std::shared_ptr<Metric::Impl> Metric::build(Factor factor, std::vector<std::vector<Expr>> components,
                                            std::string name) {
  const auto d = components.size();
  if (d == 0) throw std::invalid_argument("Metric: empty component matrix");
  for (const auto& row : components)
    if (row.size() != d) throw std::invalid_argument("Metric: component matrix must be square");
  auto impl = std::make_shared<Impl>();
  impl->factor = factor;
  impl->dim = static_cast<int>(d);
  impl->name = std::move(name);
  impl->vars = factor == Factor::temporal ? temporal_names(impl->dim) : spatial_names(impl->dim);
  impl->g = std::move(components);
  impl->g_c.resize(d);
  impl->dg_c.resize(d);
  for (std::size_t a = 0; a < d; ++a) {
    impl->dg_c[a].resize(d);
    for (std::size_t b = 0; b < d; ++b) {
      impl->g_c[a].emplace_back(impl->g[a][b], impl->vars);
      for (const auto& v : impl->vars) impl->dg_c[a][b].emplace_back(diff(impl->g[a][b], v), impl->vars);
    }
  }
  return impl;
}

Metric::Metric(Factor factor, std::vector<std::vector<Expr>> components, Box domain, std::string name) {
  auto impl = build(factor, std::move(components), std::move(name));
  if (!domain.empty() && domain.size() != static_cast<std::size_t>(impl->dim))
    throw std::invalid_argument("Metric: domain box dimension mismatch");
  impl->box = domain;
  impl->domain = [box = std::move(domain)](std::span<const double> p) { return box_contains(box, p); };
  impl_ = std::move(impl);
}

bool Metric::contains(std::span<const double> point) const {
  return point.size() == static_cast<std::size_t>(impl_->dim) && impl_->domain(point);
}

Eigen::MatrixXd Metric::at(std::span<const double> point) const {
  if (!contains(point)) throw MetricError("metric '" + impl_->name + "' evaluated outside its domain");
  Eigen::MatrixXd g(impl_->dim, impl_->dim);
  for (int a = 0; a < impl_->dim; ++a)
    for (int b = 0; b < impl_->dim; ++b) g(a, b) = impl_->g_c[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)](point);
  return g;
}

std::vector<Eigen::MatrixXd> Metric::derivatives_at(std::span<const double> point) const {
  if (!contains(point)) throw MetricError("metric '" + impl_->name + "' evaluated outside its domain");
  const int d = impl_->dim;
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(d), Eigen::MatrixXd(d, d));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        out[static_cast<std::size_t>(c)](a, b) =
            impl_->dg_c[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)][static_cast<std::size_t>(c)](point);
  return out;
}

void Metric::validate(std::span<const Eigen::VectorXd> samples) const {
  for (const auto& s : samples) {
    Eigen::MatrixXd g = at(as_span(s));
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw MetricError("metric '" + impl_->name + "' is not symmetric");
    if (!(std::abs(g.determinant()) > 1e-12)) throw MetricError("metric '" + impl_->name + "' is degenerate");
  }
}

Metric Metric::pullback(const ChangeMap& c) const {
  const bool temporal = impl_->factor == Factor::temporal;
  const auto& jac = temporal ? c.inverse_dt_exprs() : c.inverse_dx_exprs();
  const auto& inv = temporal ? c.inverse_t() : c.inverse_x();
  if (jac.size() != static_cast<std::size_t>(impl_->dim)) throw std::invalid_argument("pullback: dimension mismatch");
  Substitution s;
  for (std::size_t k = 0; k < impl_->vars.size(); ++k) s.emplace(impl_->vars[k], inv[k]);

  const auto d = static_cast<std::size_t>(impl_->dim);
  std::vector<std::vector<Expr>> back(d, std::vector<Expr>(d));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) back[a][b] = substitute(impl_->g[a][b], s);

  std::vector<std::vector<Expr>> g(d, std::vector<Expr>(d));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      Expr e;
      for (std::size_t m = 0; m < d; ++m)
        for (std::size_t k = 0; k < d; ++k) e = e + jac[m][a] * jac[k][b] * back[m][k];
      g[a][b] = e;
      g[b][a] = e;
    }

  auto impl = build(impl_->factor, std::move(g), impl_->name + "@" + c.name());
  impl->domain = [orig = impl_, c, temporal](std::span<const double> p) {
    Eigen::VectorXd q = temporal ? c.unmap_t(p) : c.unmap_x(p);
    return orig->domain(as_span(q));
  };
  return Metric(std::shared_ptr<const Impl>(std::move(impl)));
}

std::vector<std::vector<Expr>> Metric::inverse_components() const {
  const auto& g = impl_->g;
  const int d = impl_->dim;
  if (d == 1) return {{Expr::number(1.0) / g[0][0]}};
  if (d == 2) {
    Expr det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    return {{g[1][1] / det, -g[0][1] / det}, {-g[1][0] / det, g[0][0] / det}};
  }
  if (d == 3) {
    auto cof = [&](int r, int c) {
      int r0 = (r + 1) % 3, r1 = (r + 2) % 3, c0 = (c + 1) % 3, c1 = (c + 2) % 3;
      return g[static_cast<std::size_t>(r0)][static_cast<std::size_t>(c0)] *
                 g[static_cast<std::size_t>(r1)][static_cast<std::size_t>(c1)] -
             g[static_cast<std::size_t>(r0)][static_cast<std::size_t>(c1)] *
                 g[static_cast<std::size_t>(r1)][static_cast<std::size_t>(c0)];
    };
    Expr det = g[0][0] * cof(0, 0) + g[0][1] * cof(0, 1) + g[0][2] * cof(0, 2);
    std::vector<std::vector<Expr>> out(3, std::vector<Expr>(3));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = cof(c, r) / det;
    return out;
  }
  throw std::invalid_argument("inverse_components: dimension above 3");
}

Eigen::MatrixXd metric_inverse(const Metric& g, std::span<const double> point) {
  Eigen::MatrixXd m = g.at(point);
  if (!(std::abs(m.determinant()) > 1e-12)) throw MetricError("near-singular metric '" + g.name() + "'");
  return m.inverse();
}

NdArray christoffel(const Eigen::MatrixXd& gi, std::span<const Eigen::MatrixXd> dg) {
  const auto d = static_cast<std::size_t>(gi.rows());
  NdArray out({d, d, d});
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      for (std::size_t c = b; c < d; ++c) {
        double s = 0.0;
        for (std::size_t e = 0; e < d; ++e) {
          const auto ei = static_cast<Eigen::Index>(e);
          const auto bi = static_cast<Eigen::Index>(b);
          const auto ci = static_cast<Eigen::Index>(c);
          s += gi(static_cast<Eigen::Index>(a), ei) * (dg[b](ei, ci) + dg[c](bi, ei) - dg[e](bi, ci));
        }
        out(a, b, c) = 0.5 * s;
        out(a, c, b) = 0.5 * s;
      }
  return out;
}

NdArray christoffel(const Metric& g, std::span<const double> point) {
  Eigen::MatrixXd gi = metric_inverse(g, point);
  std::vector<Eigen::MatrixXd> dg = g.derivatives_at(point);
  return christoffel(gi, dg);
}

Metric catalog_metric(std::string_view name, Factor factor, int dim, const Expr& lambda) {
  const auto vars = factor == Factor::temporal ? temporal_names(dim) : spatial_names(dim);
  auto var = [&](int k) { return Expr::variable(vars[static_cast<std::size_t>(k)]); };
  auto diagonal = [dim](auto&& entry) {
    std::vector<std::vector<Expr>> g(static_cast<std::size_t>(dim), std::vector<Expr>(static_cast<std::size_t>(dim)));
    for (int k = 0; k < dim; ++k) g[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] = entry(k);
    return g;
  };
  const double inf = std::numeric_limits<double>::infinity();
  if (name == "euclidean") return Metric(factor, diagonal([](int) { return Expr::number(1.0); }), {}, "euclidean");
  if (name == "sphere") {
    if (dim != 2) throw std::invalid_argument("sphere metric has dimension 2");
    return Metric(factor,
                  diagonal([&](int k) { return k == 0 ? Expr::number(1.0) : pow(apply(Func::sin, var(0)), 2); }),
                  {{0.2, std::numbers::pi - 0.2}, {-inf, inf}}, "sphere");
  }
  if (name == "hyperbolic") {
    if (dim != 2) throw std::invalid_argument("hyperbolic metric has dimension 2");
    return Metric(factor, diagonal([&](int) { return pow(var(1), -2); }), {{-inf, inf}, {0.1, inf}}, "hyperbolic");
  }
  if (name == "exp1d") {
    if (dim != 1) throw std::invalid_argument("exp1d metric has dimension 1");
    return Metric(factor, diagonal([&](int) { return apply(Func::exp, Expr::number(2.0) * var(0)); }), {}, "exp1d");
  }
  if (name == "conformal2d") {
    if (dim != 2) throw std::invalid_argument("conformal2d metric has dimension 2");
    for (const auto& v : variables_of(lambda))
      if (std::find(vars.begin(), vars.end(), v) == vars.end())
        throw std::invalid_argument("conformal2d: lambda references '" + v + "'");
    return Metric(factor, diagonal([&](int) { return apply(Func::exp, Expr::number(2.0) * lambda); }), {},
                  "conformal2d");
  }
  throw std::invalid_argument("unknown catalog metric '" + std::string(name) + "'");
}

}  // namespace jetflow
