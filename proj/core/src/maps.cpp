#include "jetflow/maps.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "jetflow/format.hpp"

namespace jetflow {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }
Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

SmoothMap::SmoothMap(int p, std::vector<Expr> components, Box domain)
    : p_(p), components_(std::move(components)), domain_(std::move(domain)) {
  if (p <= 0 || components_.empty()) throw std::invalid_argument("SmoothMap: need p > 0 and at least one component");
  const auto vars = temporal_names(p);
  for (const Expr& e : components_) {
    value_c_.emplace_back(e, vars);
    std::vector<CompiledExpr> d1;
    std::vector<std::vector<CompiledExpr>> d2;
    for (int a = 0; a < p; ++a) {
      const Expr da = diff(e, vars[sz(a)]);
      d1.emplace_back(da, vars);
      std::vector<CompiledExpr> row;
      for (int b = 0; b < p; ++b) row.emplace_back(diff(da, vars[sz(b)]), vars);
      d2.push_back(std::move(row));
    }
    first_c_.push_back(std::move(d1));
    second_c_.push_back(std::move(d2));
  }
}

Eigen::VectorXd SmoothMap::value(std::span<const double> t) const {
  if (!box_contains(domain_, t)) throw ChartError("SmoothMap: point outside the domain");
  Eigen::VectorXd out(n());
  for (int i = 0; i < n(); ++i) out(i) = value_c_[sz(i)](t);
  return out;
}

Eigen::MatrixXd SmoothMap::first(std::span<const double> t) const {
  if (!box_contains(domain_, t)) throw ChartError("SmoothMap: point outside the domain");
  Eigen::MatrixXd out(n(), p_);
  for (int i = 0; i < n(); ++i)
    for (int a = 0; a < p_; ++a) out(i, a) = first_c_[sz(i)][sz(a)](t);
  return out;
}

NdArray SmoothMap::second(std::span<const double> t) const {
  if (!box_contains(domain_, t)) throw ChartError("SmoothMap: point outside the domain");
  NdArray out({sz(n()), sz(p_), sz(p_)});
  for (std::size_t i = 0; i < sz(n()); ++i)
    for (std::size_t a = 0; a < sz(p_); ++a)
      for (std::size_t b = 0; b < sz(p_); ++b) out(i, a, b) = second_c_[i][a][b](t);
  return out;
}

JetPoint jet_lift(const SmoothMap& f, std::span<const double> t) {
  JetPoint u;
  u.t = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
  u.x = f.value(t);
  u.v = f.first(t);
  return u;
}

NdArray affine_residual(const SmoothMap& f, const MultiTimeSpray& s, std::span<const double> t) {
  const JetPoint u = jet_lift(f, t);
  const NdArray G = s.spatial(u);
  const NdArray H = s.temporal(u);
  NdArray r = f.second(t);
  const std::size_t n = r.extent(0);
  const std::size_t p = r.extent(1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) r(i, a, b) += G(i, a, b) + G(i, b, a) + H(i, a, b) + H(i, b, a);
  return r;
}

Eigen::VectorXd harmonic_residual(const JetPoint& u, const NdArray& second, const MultiTimeSpray& s, const Metric& h) {
  const Eigen::MatrixXd hi = metric_inverse(h, as_span(u.t));
  const NdArray G = s.spatial(u);
  const NdArray H = s.temporal(u);
  const std::size_t n = second.extent(0);
  const std::size_t p = second.extent(1);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(ix(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b)
        r(ix(i)) += hi(ix(a), ix(b)) * (second(i, a, b) + 2.0 * G(i, a, b) + 2.0 * H(i, a, b));
  return r;
}

Eigen::VectorXd harmonic_residual(const SmoothMap& f, const MultiTimeSpray& s, const Metric& h,
                                  std::span<const double> t) {
  return harmonic_residual(jet_lift(f, t), f.second(t), s, h);
}

PoissonSource poisson_source(const MultiTimeSpray& s, const Metric& h) {
  PoissonSource src;
  src.components = [s, h](const JetPoint& u) {
    const NdArray Gm = christoffel(h, as_span(u.t));
    NdArray S = s.spatial(u) + s.temporal(u);
    const std::size_t n = S.extent(0);
    const std::size_t p = S.extent(1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) {
          double x = 0.0;
          for (std::size_t g = 0; g < p; ++g) x += Gm(g, a, b) * u.v(ix(i), ix(g));
          S(i, a, b) += 0.5 * x;
        }
    return S;
  };
  auto comps = src.components;
  src.trace = [comps, h](const JetPoint& u) {
    const Eigen::MatrixXd hi = metric_inverse(h, as_span(u.t));
    const NdArray S = comps(u);
    const std::size_t n = S.extent(0);
    const std::size_t p = S.extent(1);
    Eigen::VectorXd tr = Eigen::VectorXd::Zero(ix(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) tr(ix(i)) += hi(ix(a), ix(b)) * S(i, a, b);
    return tr;
  };
  return src;
}

Eigen::VectorXd poisson_residual(const SmoothMap& f, const PoissonSource& source, const Metric& h,
                                 std::span<const double> t) {
  const JetPoint u = jet_lift(f, t);
  const NdArray x2 = f.second(t);
  const Eigen::MatrixXd hi = metric_inverse(h, as_span(u.t));
  const NdArray Gm = christoffel(h, t);
  const std::size_t n = x2.extent(0);
  const std::size_t p = x2.extent(1);
  Eigen::VectorXd r = 2.0 * source.trace(u);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) {
        double lap = x2(i, a, b);
        for (std::size_t g = 0; g < p; ++g) lap -= Gm(g, a, b) * u.v(ix(i), ix(g));
        r(ix(i)) += hi(ix(a), ix(b)) * lap;
      }
  return r;
}

Trajectory solve_affine_ode(const MultiTimeSpray& s, const Eigen::VectorXd& x0, const Eigen::VectorXd& v0, double t0,
                            double t1, double step) {
  if (s.temporal.p != 1 || s.spatial.p != 1) throw std::invalid_argument("solve_affine_ode: requires dim T = 1");
  if (!(step > 0.0)) throw std::invalid_argument("solve_affine_ode: step must be positive");
  if (!(t1 >= t0)) throw std::invalid_argument("solve_affine_ode: t1 must not precede t0");
  const int n = static_cast<int>(x0.size());
  if (v0.size() != n || s.spatial.n != n) throw std::invalid_argument("solve_affine_ode: dimension mismatch");

  auto accel = [&s, n](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    JetPoint u{Eigen::VectorXd::Constant(1, t), x, v};
    const NdArray G = s.spatial(u);
    const NdArray H = s.temporal(u);
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) a(i) = -2.0 * (G(i, 0, 0) + H(i, 0, 0));
    return a;
  };

  Trajectory tr;
  tr.t.push_back(t0);
  tr.x.push_back(x0);
  tr.v.push_back(v0);
  const auto steps = static_cast<long>(std::ceil((t1 - t0) / step - 1e-9));
  Eigen::VectorXd x = x0;
  Eigen::VectorXd v = v0;
  double t = t0;
  for (long k = 1; k <= steps; ++k) {
    const double tn = k == steps ? t1 : t0 + static_cast<double>(k) * step;
    const double dt = tn - t;
    try {
      const Eigen::VectorXd k1x = v;
      const Eigen::VectorXd k1v = accel(t, x, v);
      const Eigen::VectorXd k2x = v + 0.5 * dt * k1v;
      const Eigen::VectorXd k2v = accel(t + 0.5 * dt, x + 0.5 * dt * k1x, k2x);
      const Eigen::VectorXd k3x = v + 0.5 * dt * k2v;
      const Eigen::VectorXd k3v = accel(t + 0.5 * dt, x + 0.5 * dt * k2x, k3x);
      const Eigen::VectorXd k4x = v + dt * k3v;
      const Eigen::VectorXd k4v = accel(t + dt, x + dt * k3x, k4x);
      x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
      v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    } catch (const std::exception& e) {
      throw IntegrationError(std::string("spray evaluation failed at t = ") + format_double(t) + ": " + e.what(), t,
                             tr);
    }
    if (!x.allFinite() || !v.allFinite())
      throw IntegrationError("non-finite state after t = " + format_double(t), t, tr);
    t = tn;
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.v.push_back(v);
  }
  return tr;
}

double GridMap::t1(int a) const {
  return options.t1_lo + (options.t1_hi - options.t1_lo) * static_cast<double>(a) / static_cast<double>(m - 1);
}
double GridMap::t2(int b) const {
  return options.t2_lo + (options.t2_hi - options.t2_lo) * static_cast<double>(b) / static_cast<double>(m - 1);
}

GridMap solve_harmonic_grid(const MultiTimeSpray& s, const Metric& h, const BoundaryData& boundary, int n,
                            const GridOptions& options) {
  if (h.dim() != 2 || s.temporal.p != 2 || s.spatial.p != 2)
    throw std::invalid_argument("solve_harmonic_grid: requires dim T = 2");
  if (options.m < 4) throw std::invalid_argument("solve_harmonic_grid: need m >= 4");
  if (!(options.damping > 0.0 && options.damping <= 1.0))
    throw std::invalid_argument("solve_harmonic_grid: damping must lie in (0, 1]");
  const int m = options.m;
  GridMap g;
  g.m = m;
  g.n = n;
  g.options = options;
  const double h1 = (options.t1_hi - options.t1_lo) / (m - 1);
  const double h2 = (options.t2_hi - options.t2_lo) / (m - 1);

  auto idx = [m](int a, int b) { return static_cast<std::size_t>(a * m + b); };
  g.values.assign(static_cast<std::size_t>(m * m), Eigen::VectorXd::Zero(n));
  for (int a = 0; a < m; ++a) {
    g.values[idx(a, 0)] = boundary(g.t1(a), g.t2(0));
    g.values[idx(a, m - 1)] = boundary(g.t1(a), g.t2(m - 1));
  }
  for (int b = 0; b < m; ++b) {
    g.values[idx(0, b)] = boundary(g.t1(0), g.t2(b));
    g.values[idx(m - 1, b)] = boundary(g.t1(m - 1), g.t2(b));
  }
  for (const auto& v : g.values)
    if (v.size() != n || !v.allFinite()) throw std::invalid_argument("solve_harmonic_grid: bad boundary data");

  // Transfinite (Coons) interpolation of the boundary as the initial guess.
  for (int a = 1; a < m - 1 && options.transfinite_guess; ++a)
    for (int b = 1; b < m - 1; ++b) {
      const double u = static_cast<double>(a) / (m - 1);
      const double w = static_cast<double>(b) / (m - 1);
      g.values[idx(a, b)] = (1 - u) * g.values[idx(0, b)] + u * g.values[idx(m - 1, b)] +
                            (1 - w) * g.values[idx(a, 0)] + w * g.values[idx(a, m - 1)] -
                            ((1 - u) * (1 - w) * g.values[idx(0, 0)] + u * (1 - w) * g.values[idx(m - 1, 0)] +
                             (1 - u) * w * g.values[idx(0, m - 1)] + u * w * g.values[idx(m - 1, m - 1)]);
    }

  // Per-node temporal data does not change between sweeps.
  std::vector<double> diag(static_cast<std::size_t>(m * m), 0.0);
  std::vector<Eigen::Matrix2d> hinv(static_cast<std::size_t>(m * m), Eigen::Matrix2d::Zero());
  for (int a = 1; a < m - 1; ++a)
    for (int b = 1; b < m - 1; ++b) {
      const double t[2] = {g.t1(a), g.t2(b)};
      const Eigen::Matrix2d hi = metric_inverse(h, t);
      const double d = 2.0 * hi(0, 0) / (h1 * h1) + 2.0 * hi(1, 1) / (h2 * h2);
      if (!(d > 0.0)) throw std::invalid_argument("solve_harmonic_grid: h^11/h1^2 + h^22/h2^2 must be positive");
      diag[idx(a, b)] = d;
      hinv[idx(a, b)] = hi;
    }

  auto node_residual = [&](const std::vector<Eigen::VectorXd>& x, int a, int b) {
    JetPoint u{Eigen::Vector2d(g.t1(a), g.t2(b)), x[idx(a, b)], Eigen::MatrixXd(n, 2)};
    NdArray d2({static_cast<std::size_t>(n), 2, 2});
    for (int i = 0; i < n; ++i) {
      const double c = x[idx(a, b)](i);
      const double e = x[idx(a + 1, b)](i);
      const double w = x[idx(a - 1, b)](i);
      const double nn = x[idx(a, b + 1)](i);
      const double ss = x[idx(a, b - 1)](i);
      u.v(i, 0) = (e - w) / (2 * h1);
      u.v(i, 1) = (nn - ss) / (2 * h2);
      const double cross =
          (x[idx(a + 1, b + 1)](i) - x[idx(a + 1, b - 1)](i) - x[idx(a - 1, b + 1)](i) + x[idx(a - 1, b - 1)](i)) /
          (4 * h1 * h2);
      d2(i, 0, 0) = (e - 2 * c + w) / (h1 * h1);
      d2(i, 1, 1) = (nn - 2 * c + ss) / (h2 * h2);
      d2(i, 0, 1) = cross;
      d2(i, 1, 0) = cross;
    }
    // Same trace as harmonic_residual with h^{ab} taken from the node cache.
    const Eigen::Matrix2d& hi = hinv[idx(a, b)];
    const NdArray G = s.spatial(u);
    const NdArray H = s.temporal(u);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
      for (std::size_t al = 0; al < 2; ++al)
        for (std::size_t be = 0; be < 2; ++be)
          r(i) += hi(ix(al), ix(be)) * (d2(i, al, be) + 2.0 * G(i, al, be) + 2.0 * H(i, al, be));
    return r;
  };

  const int workers = std::max(1, std::min(options.workers, m - 2));
  std::vector<Eigen::VectorXd> next = g.values;
  std::vector<double> res(static_cast<std::size_t>(m * m), 0.0);

  // One sweep over interior rows [lo, hi): residuals from `cur`, updates into `next`.
  auto sweep_rows = [&](const std::vector<Eigen::VectorXd>& cur, int lo, int hi, bool update) {
    for (int a = lo; a < hi; ++a)
      for (int b = 1; b < m - 1; ++b) {
        const Eigen::VectorXd r = node_residual(cur, a, b);
        res[idx(a, b)] = r.cwiseAbs().maxCoeff();
        if (update) next[idx(a, b)] = cur[idx(a, b)] + options.damping * r / diag[idx(a, b)];
      }
  };
  auto sweep = [&](bool update) {
    if (workers == 1) {
      sweep_rows(g.values, 1, m - 1, update);
    } else {
      std::vector<std::thread> pool;
      const int rows = m - 2;
      for (int w = 0; w < workers; ++w) {
        const int lo = 1 + rows * w / workers;
        const int hi = 1 + rows * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] { sweep_rows(g.values, lo, hi, update); });
      }
      for (auto& th : pool) th.join();
    }
    return *std::max_element(res.begin(), res.end());
  };

  double current = 0.0;
  for (int it = 0;; ++it) {
    const bool more = it < options.max_iters;
    current = sweep(more);
    if (it == 0) g.initial_residual = current;
    if (it % 100 == 0 || current < options.tol || !more) g.log.emplace_back(it, current);
    g.iterations = it;
    if (current < options.tol) {
      g.status = GridStatus::converged;
      break;
    }
    if (!std::isfinite(current) || current > 10.0 * g.initial_residual) {
      g.status = GridStatus::diverged;
      break;
    }
    if (!more) {
      g.status = GridStatus::max_iters;
      break;
    }
    std::swap(g.values, next);
  }
  g.final_residual = current;
  g.residual = res;
  return g;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr, std::span<const double> residual) {
  const std::size_t n = tr.x.empty() ? 0 : static_cast<std::size_t>(tr.x.front().size());
  os << "t1";
  for (std::size_t i = 0; i < n; ++i) os << ",x" << i + 1;
  for (std::size_t i = 0; i < n; ++i) os << ",v" << i + 1;
  os << ",residual\n";
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    os << format_double(tr.t[k]);
    for (std::size_t i = 0; i < n; ++i) os << ',' << format_double(tr.x[k](ix(i)));
    for (std::size_t i = 0; i < n; ++i) os << ',' << format_double(tr.v[k](ix(i)));
    os << ',' << (k < residual.size() ? format_double(residual[k]) : std::string("nan")) << '\n';
  }
}

void write_grid_csv(std::ostream& os, const GridMap& g) {
  os << "t1,t2";
  for (int i = 0; i < g.n; ++i) os << ",x" << i + 1;
  os << ",residual\n";
  for (int a = 0; a < g.m; ++a)
    for (int b = 0; b < g.m; ++b) {
      os << format_double(g.t1(a)) << ',' << format_double(g.t2(b));
      for (int i = 0; i < g.n; ++i) os << ',' << format_double(g.at(a, b)(i));
      os << ',' << format_double(g.residual[static_cast<std::size_t>(a * g.m + b)]) << '\n';
    }
}

}  // namespace jetflow
