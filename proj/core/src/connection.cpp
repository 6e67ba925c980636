#include "jetflow/connection.hpp"

#include <memory>
#include <stdexcept>

namespace jetflow {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }
Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

NdArray to_ndarray(const Eigen::MatrixXd& m) {
  NdArray out({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  return out;
}

ConnectionCoefficients NonlinearConnection::operator()(const JetPoint& u) const {
  ConnectionCoefficients k = eval(u);
  if (k.M.shape() != std::vector<std::size_t>{sz(n), sz(p), sz(p)} ||
      k.N.shape() != std::vector<std::size_t>{sz(n), sz(p), sz(n)})
    throw std::logic_error("connection '" + name + "' returned wrongly shaped coefficients");
  return k;
}

NonlinearConnection zero_connection(int p, int n) {
  NonlinearConnection g;
  g.name = "zero";
  g.p = p;
  g.n = n;
  g.eval = [p, n](const JetPoint&) {
    return ConnectionCoefficients{NdArray({sz(n), sz(p), sz(p)}), NdArray({sz(n), sz(p), sz(n)})};
  };
  g.rechart = [p, n](const ChangeMap&) { return zero_connection(p, n); };
  return g;
}

NonlinearConnection canonical_connection(const Metric& h, const Metric& phi) {
  if (h.factor() != Factor::temporal || phi.factor() != Factor::spatial)
    throw std::invalid_argument("canonical_connection: expected metrics on T and M");
  const int p = h.dim();
  const int n = phi.dim();
  NonlinearConnection g;
  g.name = "canonical(" + h.name() + "," + phi.name() + ")";
  g.p = p;
  g.n = n;
  g.eval = [h, phi, p, n](const JetPoint& u) {
    const NdArray H = christoffel(h, as_span(u.t));
    const NdArray G = christoffel(phi, as_span(u.x));
    ConnectionCoefficients k{NdArray({sz(n), sz(p), sz(p)}), NdArray({sz(n), sz(p), sz(n)})};
    for (std::size_t j = 0; j < sz(n); ++j)
      for (std::size_t b = 0; b < sz(p); ++b) {
        for (std::size_t a = 0; a < sz(p); ++a) {
          double s = 0.0;
          for (std::size_t c = 0; c < sz(p); ++c) s += H(c, a, b) * u.v(ix(j), ix(c));
          k.M(j, b, a) = -s;
        }
        for (std::size_t i = 0; i < sz(n); ++i) {
          double s = 0.0;
          for (std::size_t m = 0; m < sz(n); ++m) s += G(j, i, m) * u.v(ix(m), ix(b));
          k.N(j, b, i) = s;
        }
      }
    return k;
  };
  g.rechart = [h, phi](const ChangeMap& c) { return canonical_connection(h.pullback(c), phi.pullback(c)); };
  return g;
}

ConnectionCoefficients transform_connection(const ConnectionCoefficients& base, const JetChange& jc) {
  const Eigen::MatrixXd& A = jc.blocks.spatial;
  const Eigen::MatrixXd& B = jc.blocks.temporal_inverse;
  const Eigen::MatrixXd& Ai = jc.blocks.spatial_inverse;
  const std::size_t n = base.M.extent(0);
  const std::size_t p = base.M.extent(1);

  // Right-hand sides of the law, then contract with the inverse of the
  // block that multiplies the tilde coefficients.
  NdArray rm({n, p, p});
  NdArray rn({n, p, n});
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t b = 0; b < p; ++b) {
      for (std::size_t a = 0; a < p; ++a) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k)
          for (std::size_t g = 0; g < p; ++g) s += base.M(k, g, a) * A(ix(j), ix(k)) * B(ix(g), ix(b));
        rm(j, b, a) = s - jc.dv_dt(j, b, a);
      }
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k)
          for (std::size_t g = 0; g < p; ++g) s += base.N(k, g, i) * A(ix(j), ix(k)) * B(ix(g), ix(b));
        rn(j, b, i) = s - jc.dv_dx(j, b, i);
      }
    }

  ConnectionCoefficients out{NdArray({n, p, p}), NdArray({n, p, n})};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t b = 0; b < p; ++b) {
      for (std::size_t m = 0; m < p; ++m) {
        double s = 0.0;
        for (std::size_t a = 0; a < p; ++a) s += rm(j, b, a) * B(ix(a), ix(m));
        out.M(j, b, m) = s;
      }
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += rn(j, b, i) * Ai(ix(i), ix(k));
        out.N(j, b, k) = s;
      }
    }
  return out;
}

ConnectionCoefficients transform_connection(const NonlinearConnection& g, const ChangeMap& c, const JetPoint& u) {
  return transform_connection(g(u), jet_change(c, u));
}

namespace {

// M and N side by side so one relative error covers both.
NdArray pack(const ConnectionCoefficients& k) {
  NdArray out({k.M.size() + k.N.size()});
  std::copy(k.M.data().begin(), k.M.data().end(), out.data().begin());
  std::copy(k.N.data().begin(), k.N.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(k.M.size()));
  return out;
}

}  // namespace

Verdict check_connection_law(const NonlinearConnection& g, std::span<const ChangeMap> changes,
                             std::span<const JetPoint> points, double tol) {
  LawCheck check = [&g](const ChangeMap& c) {
    auto native = std::make_shared<NonlinearConnection>(g.rechart(c));
    return [&g, &c, native](const JetPoint& u) {
      const JetChange jc = jet_change(c, u);
      return std::pair{pack(transform_connection(g(u), jc)), pack((*native)(jc.image))};
    };
  };
  return run_law_check(check, changes, points, tol);
}

Eigen::MatrixXd adapted_frame(const ConnectionCoefficients& k, int p, int n) {
  const int d = p + n + p * n;
  Eigen::MatrixXd F = Eigen::MatrixXd::Identity(d, d);
  for (int j = 0; j < n; ++j)
    for (int b = 0; b < p; ++b) {
      const int col = jet_coordinate(p, n, j, b);
      for (int a = 0; a < p; ++a) F(a, col) = -k.M(j, b, a);
      for (int i = 0; i < n; ++i) F(p + i, col) = -k.N(j, b, i);
    }
  return F;
}

Eigen::MatrixXd adapted_frame(const NonlinearConnection& g, const JetPoint& u) {
  return adapted_frame(g(u), g.p, g.n);
}

Eigen::MatrixXd adapted_coframe(const ConnectionCoefficients& k, int p, int n) {
  const int d = p + n + p * n;
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a) {
      const int row = jet_coordinate(p, n, i, a);
      for (int b = 0; b < p; ++b) C(row, b) = k.M(i, a, b);
      for (int j = 0; j < n; ++j) C(row, p + j) = k.N(i, a, j);
    }
  return C;
}

Eigen::MatrixXd adapted_coframe(const NonlinearConnection& g, const JetPoint& u) {
  return adapted_coframe(g(u), g.p, g.n);
}

Eigen::MatrixXd adapted_frame_rule(const JacobianBlocks& jb) {
  const Eigen::MatrixXd& Jt = jb.temporal;
  const Eigen::MatrixXd& A = jb.spatial;
  const Eigen::MatrixXd& B = jb.temporal_inverse;
  const int p = static_cast<int>(Jt.rows());
  const int n = static_cast<int>(A.rows());
  const int d = p + n + p * n;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d, d);
  K.topLeftCorner(p, p) = Jt.transpose();
  K.block(p, p, n, n) = A.transpose();
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a)
      for (int j = 0; j < n; ++j)
        for (int b = 0; b < p; ++b) K(jet_coordinate(p, n, i, a), jet_coordinate(p, n, j, b)) = A(j, i) * B(a, b);
  return K;
}

Eigen::MatrixXd adapted_coframe_rule(const JacobianBlocks& jb) {
  const Eigen::MatrixXd& Jt = jb.temporal;
  const Eigen::MatrixXd& B = jb.temporal_inverse;
  const Eigen::MatrixXd& Ai = jb.spatial_inverse;
  const int p = static_cast<int>(Jt.rows());
  const int n = static_cast<int>(Ai.rows());
  const int d = p + n + p * n;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d, d);
  K.topLeftCorner(p, p) = B;
  K.block(p, p, n, n) = Ai;
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a)
      for (int j = 0; j < n; ++j)
        for (int b = 0; b < p; ++b) K(jet_coordinate(p, n, i, a), jet_coordinate(p, n, j, b)) = Ai(i, j) * Jt(b, a);
  return K;
}

AdaptedVerdicts check_adapted_laws(const NonlinearConnection& g, std::span<const ChangeMap> changes,
                                   std::span<const JetPoint> points, double tol) {
  auto native_of = [&g](const ChangeMap& c) { return std::make_shared<NonlinearConnection>(g.rechart(c)); };
  LawCheck frame = [&g, native_of](const ChangeMap& c) {
    auto native = native_of(c);
    return [&g, &c, native](const JetPoint& u) {
      const JetChange jc = jet_change(c, u);
      const Eigen::MatrixXd pushed = adapted_frame(g, u) * natural_frame_change(c, u);
      const Eigen::MatrixXd rule = adapted_frame_rule(jc.blocks) * adapted_frame(*native, jc.image);
      return std::pair{to_ndarray(rule), to_ndarray(pushed)};
    };
  };
  LawCheck coframe = [&g, native_of](const ChangeMap& c) {
    auto native = native_of(c);
    return [&g, &c, native](const JetPoint& u) {
      const JetChange jc = jet_change(c, u);
      const Eigen::MatrixXd pushed = adapted_coframe(g, u) * natural_coframe_change(c, u);
      const Eigen::MatrixXd rule = adapted_coframe_rule(jc.blocks) * adapted_coframe(*native, jc.image);
      return std::pair{to_ndarray(rule), to_ndarray(pushed)};
    };
  };
  return {run_law_check(frame, changes, points, tol), run_law_check(coframe, changes, points, tol)};
}

NonlinearConnection connection_from_sprays(const MultiTimeSpray& s, const Metric& h) {
  if (s.temporal.kind != SprayKind::temporal || s.spatial.kind != SprayKind::spatial)
    throw std::invalid_argument("connection_from_sprays: expected a temporal and a spatial spray");
  const int p = s.temporal.p;
  const int n = s.temporal.n;
  if (s.spatial.p != p || s.spatial.n != n || h.dim() != p)
    throw std::invalid_argument("connection_from_sprays: dimension mismatch");
  const HSpray trace = h_trace(s.spatial, h);
  NonlinearConnection g;
  g.name = "from_sprays(" + s.temporal.name + "," + s.spatial.name + ")";
  g.p = p;
  g.n = n;
  g.eval = [s, h, trace, p, n](const JetPoint& u) {
    ConnectionCoefficients k{2.0 * s.temporal(u), NdArray({sz(n), sz(p), sz(n)})};
    const Eigen::MatrixXd hv = h.at(as_span(u.t));
    const NdArray grad = trace.jet_gradient(u);
    for (std::size_t i = 0; i < sz(n); ++i)
      for (std::size_t a = 0; a < sz(p); ++a)
        for (std::size_t j = 0; j < sz(n); ++j) {
          double v = 0.0;
          for (std::size_t c = 0; c < sz(p); ++c) v += grad(i, j, c) * hv(ix(c), ix(a));
          k.N(i, a, j) = v;
        }
    return k;
  };
  g.rechart = [s, h](const ChangeMap& c) {
    return connection_from_sprays(MultiTimeSpray{s.temporal.rechart(c), s.spatial.rechart(c)}, h.pullback(c));
  };
  return g;
}

MultiTimeSpray sprays_from_connection(const NonlinearConnection& g) {
  const int p = g.p;
  const int n = g.n;
  Spray H;
  H.kind = SprayKind::temporal;
  H.name = "half_M(" + g.name + ")";
  H.p = p;
  H.n = n;
  H.eval = [g](const JetPoint& u) { return 0.5 * g(u).M; };
  H.rechart = [g](const ChangeMap& c) { return sprays_from_connection(g.rechart(c)).temporal; };

  Spray G;
  G.kind = SprayKind::spatial;
  G.name = "half_Nx(" + g.name + ")";
  G.p = p;
  G.n = n;
  G.eval = [g, p, n](const JetPoint& u) {
    const NdArray N = g(u).N;
    NdArray out({sz(n), sz(p), sz(p)});
    for (std::size_t i = 0; i < sz(n); ++i)
      for (std::size_t a = 0; a < sz(p); ++a)
        for (std::size_t b = 0; b < sz(p); ++b) {
          double s = 0.0;
          for (std::size_t j = 0; j < sz(n); ++j) s += N(i, a, j) * u.v(ix(j), ix(b));
          out(i, a, b) = 0.5 * s;
        }
    return out;
  };
  G.rechart = [g](const ChangeMap& c) { return sprays_from_connection(g.rechart(c)).spatial; };
  return {H, G};
}

}  // namespace jetflow
