#include "jetflow/charts.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace jetflow::charts {

namespace {

std::vector<Expr> vars(const std::vector<std::string>& names) {
  std::vector<Expr> out;
  for (const auto& s : names) out.push_back(Expr::variable(s));
  return out;
}

std::vector<Expr> linear(const Eigen::MatrixXd& A, const std::vector<Expr>& u, const Eigen::VectorXd& b) {
  std::vector<Expr> out;
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    Expr e = Expr::number(b(r));
    for (Eigen::Index c = 0; c < A.cols(); ++c) e = e + Expr::number(A(r, c)) * u[static_cast<std::size_t>(c)];
    out.push_back(e);
  }
  return out;
}

Eigen::MatrixXd well_conditioned(Rng& rng, int d) {
  for (;;) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) A(r, c) += rng.uniform(-0.6, 0.6);
    if (rng.uniform() < 0.5) A.row(0) *= -1.0;  // orientation reversal
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) > 0.2 && s(0) / s(s.size() - 1) < 50.0) return A;
  }
}

Eigen::VectorXd offset(Rng& rng, int d) {
  Eigen::VectorXd b(d);
  for (int k = 0; k < d; ++k) b(k) = rng.uniform(-0.5, 0.5);
  return b;
}

struct Block {
  std::vector<Expr> forward;
  std::vector<Expr> inverse;
};

// Exponential stretch u = exp(k t), triangular shear w, affine y = A w + b.
Block nonlinear_block(Rng& rng, const std::vector<std::string>& names) {
  const int d = static_cast<int>(names.size());
  const std::vector<Expr> z = vars(names);

  std::vector<double> kappa(static_cast<std::size_t>(d));
  for (auto& k : kappa) k = rng.uniform(0.3, 0.7);

  struct Term {
    int from;
    double amp, freq, phase;
    bool cosine;
  };
  std::vector<std::vector<Term>> shear(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      shear[static_cast<std::size_t>(a)].push_back(
          Term{b, rng.uniform(0.03, 0.1), rng.uniform(0.5, 1.5), rng.uniform(0.0, 3.0), rng.uniform() < 0.5});
  const Eigen::MatrixXd A = well_conditioned(rng, d);
  const Eigen::VectorXd b = offset(rng, d);

  auto shear_term = [](const Term& tm, const Expr& arg) {
    Expr inner = Expr::number(tm.freq) * arg + Expr::number(tm.phase);
    return Expr::number(tm.amp) * apply(tm.cosine ? Func::cos : Func::sin, inner);
  };

  Block out;
  std::vector<Expr> u;
  for (int a = 0; a < d; ++a)
    u.push_back(apply(Func::exp, Expr::number(kappa[static_cast<std::size_t>(a)]) * z[static_cast<std::size_t>(a)]));
  std::vector<Expr> w = u;
  for (int a = 0; a < d; ++a)
    for (const Term& tm : shear[static_cast<std::size_t>(a)])
      w[static_cast<std::size_t>(a)] = w[static_cast<std::size_t>(a)] + shear_term(tm, u[static_cast<std::size_t>(tm.from)]);
  out.forward = linear(A, w, b);

  // Inverse: w = A^{-1}(y - b), then back-substitute the shear from the last
  // coordinate, then undo the stretch.
  const Eigen::MatrixXd Ainv = A.inverse();
  const std::vector<Expr> wi = linear(Ainv, z, -Ainv * b);
  std::vector<Expr> ui(static_cast<std::size_t>(d));
  for (int a = d - 1; a >= 0; --a) {
    Expr e = wi[static_cast<std::size_t>(a)];
    for (const Term& tm : shear[static_cast<std::size_t>(a)]) e = e - shear_term(tm, ui[static_cast<std::size_t>(tm.from)]);
    ui[static_cast<std::size_t>(a)] = e;
  }
  for (int a = 0; a < d; ++a)
    out.inverse.push_back(apply(Func::log, ui[static_cast<std::size_t>(a)]) /
                          Expr::number(kappa[static_cast<std::size_t>(a)]));
  return out;
}

}  // namespace

ChangeMap affine(std::string name, const Eigen::MatrixXd& At, const Eigen::VectorXd& at, const Eigen::MatrixXd& Ax,
                 const Eigen::VectorXd& ax, Box domain_t, Box domain_x) {
  const int p = static_cast<int>(At.rows());
  const int n = static_cast<int>(Ax.rows());
  const auto t = vars(temporal_names(p));
  const auto x = vars(spatial_names(n));
  const Eigen::MatrixXd Ati = At.inverse();
  const Eigen::MatrixXd Axi = Ax.inverse();
  return ChangeMap(std::move(name), linear(At, t, at), linear(Ax, x, ax), linear(Ati, t, -Ati * at),
                   linear(Axi, x, -Axi * ax), std::move(domain_t), std::move(domain_x));
}

ChangeMap random_affine(Rng& rng, int p, int n, std::string name, Box domain_t, Box domain_x) {
  Eigen::MatrixXd At = well_conditioned(rng, p);
  Eigen::VectorXd at = offset(rng, p);
  Eigen::MatrixXd Ax = well_conditioned(rng, n);
  Eigen::VectorXd ax = offset(rng, n);
  return affine(std::move(name), At, at, Ax, ax, std::move(domain_t), std::move(domain_x));
}

ChangeMap random_nonlinear(Rng& rng, int p, int n, std::string name, Box domain_t, Box domain_x) {
  Block t = nonlinear_block(rng, temporal_names(p));
  Block x = nonlinear_block(rng, spatial_names(n));
  return ChangeMap(std::move(name), t.forward, x.forward, t.inverse, x.inverse, std::move(domain_t),
                   std::move(domain_x));
}

std::vector<ChangeMap> suite(Rng& rng, int p, int n, int count, const Box& domain_t, const Box& domain_x,
                             std::string_view prefix) {
  std::vector<ChangeMap> out;
  for (int k = 0; k < count; ++k) {
    std::string name = std::string(prefix) + "_" + std::to_string(k);
    if (k % 2 == 0)
      out.push_back(random_nonlinear(rng, p, n, name + "_nonlinear", domain_t, domain_x));
    else
      out.push_back(random_affine(rng, p, n, name + "_affine", domain_t, domain_x));
  }
  return out;
}

ChangeMap named(std::string_view keyword, Rng& rng, int p, int n, std::string name, Box domain_t, Box domain_x) {
  if (keyword == "identity") {
    ChangeMap id = ChangeMap::identity(p, n);
    return ChangeMap(std::move(name), id.forward_t(), id.forward_x(), id.inverse_t(), id.inverse_x(),
                     std::move(domain_t), std::move(domain_x));
  }
  if (keyword == "affine") return random_affine(rng, p, n, std::move(name), std::move(domain_t), std::move(domain_x));
  if (keyword == "nonlinear")
    return random_nonlinear(rng, p, n, std::move(name), std::move(domain_t), std::move(domain_x));
  if (keyword == "time_scale") {
    return affine(std::move(name), 2.0 * Eigen::MatrixXd::Identity(p, p), Eigen::VectorXd::Zero(p),
                  Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n), std::move(domain_t), std::move(domain_x));
  }
  throw std::invalid_argument("unknown chart change keyword '" + std::string(keyword) + "'");
}

}  // namespace jetflow::charts
