#include "jetflow/prolong.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

namespace jetflow {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

std::vector<std::string> base_names(int p, int n) {
  std::vector<std::string> out = temporal_names(p);
  for (auto& s : spatial_names(n)) out.push_back(std::move(s));
  return out;
}

Bindings jet_bindings(const JetPoint& u) {
  const auto names = jet_names(u.p(), u.n());
  const auto vals = u.flatten();
  Bindings b;
  for (std::size_t k = 0; k < names.size(); ++k) b.emplace(names[k], vals[k]);
  return b;
}

}  // namespace

BaseVectorField::BaseVectorField(int p, int n, std::vector<Expr> temporal, std::vector<Expr> spatial)
    : p(p), n(n), temporal(std::move(temporal)), spatial(std::move(spatial)) {
  if (this->temporal.size() != sz(p) || this->spatial.size() != sz(n))
    throw std::invalid_argument("BaseVectorField: expected p temporal and n spatial components");
  const auto names = base_names(p, n);
  for (const auto* list : {&this->temporal, &this->spatial})
    for (const Expr& e : *list)
      for (const auto& v : variables_of(e))
        if (std::find(names.begin(), names.end(), v) == names.end())
          throw std::invalid_argument("BaseVectorField: component depends on '" + v + "', not a coordinate of T x M");
}

BaseVectorField BaseVectorField::pushforward(const ChangeMap& c) const {
  Substitution back;
  const auto tn = temporal_names(p);
  const auto xn = spatial_names(n);
  for (int a = 0; a < p; ++a) back.emplace(tn[sz(a)], c.inverse_t()[sz(a)]);
  for (int i = 0; i < n; ++i) back.emplace(xn[sz(i)], c.inverse_x()[sz(i)]);
  std::vector<Expr> t(sz(p));
  std::vector<Expr> x(sz(n));
  for (int a = 0; a < p; ++a) {
    Expr s;
    for (int b = 0; b < p; ++b) s = s + c.dt_exprs()[sz(a)][sz(b)] * temporal[sz(b)];
    t[sz(a)] = substitute(s, back);
  }
  for (int i = 0; i < n; ++i) {
    Expr s;
    for (int j = 0; j < n; ++j) s = s + c.dx_exprs()[sz(i)][sz(j)] * spatial[sz(j)];
    x[sz(i)] = substitute(s, back);
  }
  return BaseVectorField(p, n, std::move(t), std::move(x));
}

Eigen::VectorXd BaseVectorField::at(std::span<const double> t, std::span<const double> x) const {
  Bindings b;
  const auto tn = temporal_names(p);
  const auto xn = spatial_names(n);
  for (int a = 0; a < p; ++a) b.emplace(tn[sz(a)], t[sz(a)]);
  for (int i = 0; i < n; ++i) b.emplace(xn[sz(i)], x[sz(i)]);
  Eigen::VectorXd out(p + n);
  for (int a = 0; a < p; ++a) out(a) = eval(temporal[sz(a)], b);
  for (int i = 0; i < n; ++i) out(p + i) = eval(spatial[sz(i)], b);
  return out;
}

BaseVectorField operator+(const BaseVectorField& a, const BaseVectorField& b) {
  if (a.p != b.p || a.n != b.n) throw std::invalid_argument("BaseVectorField: dimension mismatch");
  std::vector<Expr> t;
  std::vector<Expr> x;
  for (int k = 0; k < a.p; ++k) t.push_back(a.temporal[sz(k)] + b.temporal[sz(k)]);
  for (int k = 0; k < a.n; ++k) x.push_back(a.spatial[sz(k)] + b.spatial[sz(k)]);
  return BaseVectorField(a.p, a.n, std::move(t), std::move(x));
}

BaseVectorField operator*(double s, const BaseVectorField& a) {
  std::vector<Expr> t;
  std::vector<Expr> x;
  for (const Expr& e : a.temporal) t.push_back(Expr::number(s) * e);
  for (const Expr& e : a.spatial) x.push_back(Expr::number(s) * e);
  return BaseVectorField(a.p, a.n, std::move(t), std::move(x));
}

Expr total_derivative_expr(const Expr& f, int p, int n, int alpha) {
  if (alpha < 0 || alpha >= p) throw std::out_of_range("total_derivative: temporal index out of range");
  const auto tn = temporal_names(p);
  const auto xn = spatial_names(n);
  Expr out = diff(f, tn[sz(alpha)]);
  for (int i = 0; i < n; ++i) out = out + diff(f, xn[sz(i)]) * Expr::variable(jet_name(i, alpha));
  return out;
}

double total_derivative(const Expr& f, const JetPoint& u, int alpha) {
  return eval(total_derivative_expr(f, u.p(), u.n(), alpha), jet_bindings(u));
}

double total_derivative_adapted(const Expr& f, const NonlinearConnection& g, const JetPoint& u, int alpha) {
  const int p = u.p();
  const int n = u.n();
  if (alpha < 0 || alpha >= p) throw std::out_of_range("total_derivative_adapted: temporal index out of range");
  const Bindings b = jet_bindings(u);
  const auto tn = temporal_names(p);
  const auto xn = spatial_names(n);
  const ConnectionCoefficients k = g(u);
  NdArray dv({sz(n), sz(p)});
  for (int j = 0; j < n; ++j)
    for (int c = 0; c < p; ++c) dv(j, c) = eval(diff(f, jet_name(j, c)), b);

  double delta_t = eval(diff(f, tn[sz(alpha)]), b);
  for (int j = 0; j < n; ++j)
    for (int c = 0; c < p; ++c) delta_t -= k.M(j, c, alpha) * dv(j, c);
  double out = delta_t;
  for (int i = 0; i < n; ++i) {
    double delta_x = eval(diff(f, xn[sz(i)]), b);
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < p; ++c) delta_x -= k.N(j, c, i) * dv(j, c);
    out += delta_x * u.v(i, alpha);
  }
  return out;
}

DTensorField total_derivative_field(const Expr& f, int p, int n) {
  auto compiled = std::make_shared<std::vector<CompiledExpr>>();
  const auto names = jet_names(p, n);
  for (int a = 0; a < p; ++a) compiled->emplace_back(total_derivative_expr(f, p, n, a), names);
  DTensorField out;
  out.name = "D(" + to_string(f) + ")";
  out.p = p;
  out.n = n;
  out.signature = IndexSignature::parse("L(a)");
  out.components = [compiled, p](const JetPoint& u) {
    const auto z = u.flatten();
    NdArray d({sz(p)});
    for (int a = 0; a < p; ++a) d(a) = (*compiled)[sz(a)](z);
    return d;
  };
  out.rechart = [f, p, n](const ChangeMap& c) {
    return total_derivative_field(substitute(f, jet_substitution(c)), p, n);
  };
  return out;
}

std::vector<std::vector<Expr>> olver_vertical_exprs(const BaseVectorField& X) {
  const int p = X.p;
  const int n = X.n;
  std::vector<std::vector<Expr>> DXt(sz(p));  // [a][b] = D_a X^b
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) DXt[sz(a)].push_back(total_derivative_expr(X.temporal[sz(b)], p, n, a));
  std::vector<std::vector<Expr>> out(sz(n), std::vector<Expr>(sz(p)));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a) {
      Expr e = total_derivative_expr(X.spatial[sz(i)], p, n, a);
      for (int b = 0; b < p; ++b) e = e - DXt[sz(a)][sz(b)] * Expr::variable(jet_name(i, b));
      out[sz(i)][sz(a)] = e;
    }
  return out;
}

namespace {

struct CompiledField {
  std::vector<CompiledExpr> base;  // X^a then X^i over jet coordinates
  std::vector<CompiledExpr> vertical;
};

std::shared_ptr<CompiledField> compile_field(const BaseVectorField& X, bool with_vertical) {
  auto cf = std::make_shared<CompiledField>();
  const auto names = jet_names(X.p, X.n);
  for (const Expr& e : X.temporal) cf->base.emplace_back(e, names);
  for (const Expr& e : X.spatial) cf->base.emplace_back(e, names);
  if (with_vertical)
    for (const auto& row : olver_vertical_exprs(X))
      for (const Expr& e : row) cf->vertical.emplace_back(e, names);
  return cf;
}

JetVector base_part(const CompiledField& cf, std::span<const double> z, int p, int n) {
  JetVector w{Eigen::VectorXd(p), Eigen::VectorXd(n), Eigen::MatrixXd::Zero(n, p)};
  for (int a = 0; a < p; ++a) w.t(a) = cf.base[sz(a)](z);
  for (int i = 0; i < n; ++i) w.x(i) = cf.base[sz(p + i)](z);
  return w;
}

}  // namespace

JetVectorField olver_prolong(const BaseVectorField& X) {
  auto cf = compile_field(X, true);
  const int p = X.p;
  const int n = X.n;
  return JetVectorField{p, n, [cf, p, n](const JetPoint& u) {
                          const auto z = u.flatten();
                          JetVector w = base_part(*cf, z, p, n);
                          for (int i = 0; i < n; ++i)
                            for (int a = 0; a < p; ++a) w.v(i, a) = cf->vertical[sz(i * p + a)](z);
                          return w;
                        }};
}

JetVectorField horizontal_lift(const BaseVectorField& X, const NonlinearConnection& g) {
  auto cf = compile_field(X, false);
  const int p = X.p;
  const int n = X.n;
  return JetVectorField{p, n, [cf, g, p, n](const JetPoint& u) {
                          const auto z = u.flatten();
                          JetVector w = base_part(*cf, z, p, n);
                          const ConnectionCoefficients k = g(u);
                          for (int j = 0; j < n; ++j)
                            for (int b = 0; b < p; ++b) {
                              double s = 0.0;
                              for (int a = 0; a < p; ++a) s += k.M(j, b, a) * w.t(a);
                              for (int i = 0; i < n; ++i) s += k.N(j, b, i) * w.x(i);
                              w.v(j, b) = -s;
                            }
                          return w;
                        }};
}

Eigen::MatrixXd vertical_gap(const BaseVectorField& X, const NonlinearConnection& g, const JetPoint& u) {
  return olver_prolong(X)(u).v - horizontal_lift(X, g)(u).v;
}

DTensorField vertical_gap_field(const BaseVectorField& X, const NonlinearConnection& g) {
  const int p = X.p;
  const int n = X.n;
  auto pr = std::make_shared<JetVectorField>(olver_prolong(X));
  auto hl = std::make_shared<JetVectorField>(horizontal_lift(X, g));
  DTensorField f;
  f.name = "vertical_gap";
  f.p = p;
  f.n = n;
  f.signature = IndexSignature::parse("U(i,a)");
  f.components = [pr, hl, p, n](const JetPoint& u) {
    const Eigen::MatrixXd gap = (*pr)(u).v - (*hl)(u).v;
    NdArray out({sz(n * p)});
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < p; ++a) out(i * p + a) = gap(i, a);
    return out;
  };
  f.rechart = [X, g](const ChangeMap& c) { return vertical_gap_field(X.pushforward(c), g.rechart(c)); };
  return f;
}

namespace {

// RK4 flow of the base field for time s.
Eigen::VectorXd flow(const std::vector<CompiledExpr>& field, const Eigen::VectorXd& z0, double s, int substeps) {
  auto f = [&field](const Eigen::VectorXd& z) {
    Eigen::VectorXd out(z.size());
    const std::span<const double> zs(z.data(), static_cast<std::size_t>(z.size()));
    for (std::size_t k = 0; k < field.size(); ++k) out(static_cast<Eigen::Index>(k)) = field[k](zs);
    return out;
  };
  Eigen::VectorXd z = z0;
  const double h = s / substeps;
  for (int k = 0; k < substeps; ++k) {
    const Eigen::VectorXd k1 = f(z);
    const Eigen::VectorXd k2 = f(z + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(z + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(z + h * k3);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!z.allFinite()) throw ChartError("flow of the vector field left the finite domain");
  return z;
}

}  // namespace

JetPoint flow_jet(const BaseVectorField& X, const JetPoint& u, double s, const FlowCheckOptions& opts) {
  const int p = X.p;
  const int n = X.n;
  const int d = p + n;
  const auto names = base_names(p, n);
  std::vector<CompiledExpr> field;
  for (const Expr& e : X.temporal) field.emplace_back(e, names);
  for (const Expr& e : X.spatial) field.emplace_back(e, names);

  Eigen::VectorXd z(d);
  z << u.t, u.x;
  const Eigen::VectorXd image = flow(field, z, s, opts.substeps);
  Eigen::MatrixXd J(d, d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd zp = z;
    Eigen::VectorXd zm = z;
    zp(k) += opts.jacobian_step;
    zm(k) -= opts.jacobian_step;
    J.col(k) = (flow(field, zp, s, opts.substeps) - flow(field, zm, s, opts.substeps)) / (2.0 * opts.jacobian_step);
  }
  const Eigen::MatrixXd Ttt = J.topLeftCorner(p, p);
  const Eigen::MatrixXd Ttx = J.topRightCorner(p, n);
  const Eigen::MatrixXd Xt = J.bottomLeftCorner(n, p);
  const Eigen::MatrixXd Xx = J.bottomRightCorner(n, n);
  const Eigen::MatrixXd denom = Ttt + Ttx * u.v;
  JetPoint out;
  out.t = image.head(p);
  out.x = image.tail(n);
  out.v = (Xt + Xx * u.v) * denom.inverse();
  return out;
}

double flow_prolong_check(const BaseVectorField& X, const JetPoint& u, double eps, const FlowCheckOptions& opts) {
  if (!(eps > 0.0)) throw std::invalid_argument("flow_prolong_check: eps must be positive");
  const JetPoint plus = flow_jet(X, u, eps, opts);
  const JetPoint minus = flow_jet(X, u, -eps, opts);
  const JetVector pr = olver_prolong(X)(u);
  double worst = 0.0;
  worst = std::max(worst, ((plus.t - minus.t) / (2 * eps) - pr.t).cwiseAbs().maxCoeff());
  worst = std::max(worst, ((plus.x - minus.x) / (2 * eps) - pr.x).cwiseAbs().maxCoeff());
  worst = std::max(worst, ((plus.v - minus.v) / (2 * eps) - pr.v).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace jetflow
