#include "jetflow/jet.hpp"

#include <cmath>
#include <stdexcept>

namespace jetflow {

void JetPoint::check() const {
  if (t.size() == 0 || x.size() == 0) throw std::invalid_argument("JetPoint: empty base coordinates");
  if (v.rows() != x.size() || v.cols() != t.size())
    throw std::invalid_argument("JetPoint: jet block must be n x p");
  if (!t.allFinite() || !x.allFinite() || !v.allFinite()) throw std::invalid_argument("JetPoint: non-finite entry");
}

std::vector<double> JetPoint::flatten() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(dim()));
  for (Eigen::Index a = 0; a < t.size(); ++a) out.push_back(t(a));
  for (Eigen::Index i = 0; i < x.size(); ++i) out.push_back(x(i));
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index a = 0; a < v.cols(); ++a) out.push_back(v(i, a));
  return out;
}

JetPoint JetPoint::unflatten(int p, int n, std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(p + n + p * n)) throw std::invalid_argument("JetPoint: wrong length");
  JetPoint u{Eigen::VectorXd(p), Eigen::VectorXd(n), Eigen::MatrixXd(n, p)};
  std::size_t k = 0;
  for (int a = 0; a < p; ++a) u.t(a) = values[k++];
  for (int i = 0; i < n; ++i) u.x(i) = values[k++];
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a) u.v(i, a) = values[k++];
  return u;
}

JetChange jet_change(const ChangeMap& c, const JetPoint& u) {
  if (u.p() != c.p() || u.n() != c.n()) throw std::invalid_argument("jet_change: dimension mismatch");
  const auto t = as_span(u.t);
  const auto x = as_span(u.x);
  JetChange out;
  out.blocks = jacobian_blocks(c, t, x);
  const Eigen::MatrixXd& A = out.blocks.spatial;
  const Eigen::MatrixXd& B = out.blocks.temporal_inverse;
  const int p = u.p();
  const int n = u.n();

  out.image.t = c.map_t(t);
  out.image.x = c.map_x(x);
  out.image.v = A * u.v * B;

  const std::vector<Eigen::MatrixXd> ddt = c.ddt(t);
  const std::vector<Eigen::MatrixXd> ddx = c.ddx(x);
  const Eigen::MatrixXd Av = A * u.v;
  const Eigen::MatrixXd vB = u.v * B;

  out.dv_dt = NdArray({static_cast<std::size_t>(n), static_cast<std::size_t>(p), static_cast<std::size_t>(p)});
  for (int a = 0; a < p; ++a) {
    // d(Jt)/dt^a, then dB/dt^a = -B dJt B.
    Eigen::MatrixXd dJ(p, p);
    for (int m = 0; m < p; ++m)
      for (int nu = 0; nu < p; ++nu) dJ(m, nu) = ddt[static_cast<std::size_t>(m)](nu, a);
    const Eigen::MatrixXd dB = -B * dJ * B;
    const Eigen::MatrixXd dv = Av * dB;
    for (int j = 0; j < n; ++j)
      for (int b = 0; b < p; ++b) out.dv_dt(j, b, a) = dv(j, b);
  }

  out.dv_dx = NdArray({static_cast<std::size_t>(n), static_cast<std::size_t>(p), static_cast<std::size_t>(n)});
  for (int j = 0; j < n; ++j)
    for (int b = 0; b < p; ++b)
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += ddx[static_cast<std::size_t>(j)](i, k) * vB(k, b);
        out.dv_dx(j, b, i) = s;
      }
  return out;
}

JetPoint transform_jet(const ChangeMap& c, const JetPoint& u) { return jet_change(c, u).image; }

namespace {

Eigen::MatrixXd frame_from(const JetChange& jc, int p, int n) {
  const int d = p + n + p * n;
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(d, d);
  const Eigen::MatrixXd& Jt = jc.blocks.temporal;
  const Eigen::MatrixXd& A = jc.blocks.spatial;
  const Eigen::MatrixXd& B = jc.blocks.temporal_inverse;
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) F(a, b) = Jt(b, a);
    for (int j = 0; j < n; ++j)
      for (int b = 0; b < p; ++b) F(a, jet_coordinate(p, n, j, b)) = jc.dv_dt(j, b, a);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) F(p + i, p + j) = A(j, i);
    for (int j = 0; j < n; ++j)
      for (int b = 0; b < p; ++b) F(p + i, jet_coordinate(p, n, j, b)) = jc.dv_dx(j, b, i);
  }
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a)
      for (int j = 0; j < n; ++j)
        for (int b = 0; b < p; ++b) F(jet_coordinate(p, n, i, a), jet_coordinate(p, n, j, b)) = A(j, i) * B(a, b);
  return F;
}

}  // namespace

Eigen::MatrixXd natural_frame_change(const ChangeMap& c, const JetPoint& u) {
  return frame_from(jet_change(c, u), u.p(), u.n());
}

Eigen::MatrixXd natural_coframe_change(const ChangeMap& c, const JetPoint& u) {
  const JetPoint image = transform_jet(c, u);
  return natural_frame_change(c.inverse(), image).transpose();
}

Substitution jet_substitution(const ChangeMap& c) {
  const int p = c.p();
  const int n = c.n();
  const auto tn = temporal_names(p);
  const auto xn = spatial_names(n);
  Substitution back_t;
  for (int a = 0; a < p; ++a) back_t.emplace(tn[static_cast<std::size_t>(a)], c.inverse_t()[static_cast<std::size_t>(a)]);

  Substitution s;
  for (int a = 0; a < p; ++a) s.emplace(tn[static_cast<std::size_t>(a)], c.inverse_t()[static_cast<std::size_t>(a)]);
  for (int i = 0; i < n; ++i) s.emplace(xn[static_cast<std::size_t>(i)], c.inverse_x()[static_cast<std::size_t>(i)]);
  // x^j_b = (d x^j / d x~^k)(x~) (d t~^g / d t^b)(t(t~)) x~^k_g
  std::vector<std::vector<Expr>> dt_back(static_cast<std::size_t>(p), std::vector<Expr>(static_cast<std::size_t>(p)));
  for (int g = 0; g < p; ++g)
    for (int b = 0; b < p; ++b)
      dt_back[static_cast<std::size_t>(g)][static_cast<std::size_t>(b)] =
          substitute(c.dt_exprs()[static_cast<std::size_t>(g)][static_cast<std::size_t>(b)], back_t);
  for (int j = 0; j < n; ++j)
    for (int b = 0; b < p; ++b) {
      Expr e;
      for (int k = 0; k < n; ++k)
        for (int g = 0; g < p; ++g)
          e = e + c.inverse_dx_exprs()[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] *
                      dt_back[static_cast<std::size_t>(g)][static_cast<std::size_t>(b)] *
                      Expr::variable(jet_name(k, g));
      s.emplace(jet_name(j, b), e);
    }
  return s;
}

}  // namespace jetflow
