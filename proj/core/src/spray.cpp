#include "jetflow/spray.hpp"

#include <memory>
#include <stdexcept>

namespace jetflow {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }
Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

NdArray spray_shape(int p, int n) { return NdArray({sz(n), sz(p), sz(p)}); }

// Pure tensor part: S(j, b, a) B(a, g) A(k, j) B(b, m) -> out(k, m, g).
NdArray homogeneous(const NdArray& S, const JetChange& jc) {
  const Eigen::MatrixXd& A = jc.blocks.spatial;
  const Eigen::MatrixXd& B = jc.blocks.temporal_inverse;
  const std::size_t n = S.extent(0);
  const std::size_t p = S.extent(1);
  NdArray out({n, p, p});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t m = 0; m < p; ++m)
      for (std::size_t g = 0; g < p; ++g) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t b = 0; b < p; ++b)
            for (std::size_t a = 0; a < p; ++a) s += S(j, b, a) * B(ix(a), ix(g)) * A(ix(k), ix(j)) * B(ix(b), ix(m));
        out(k, m, g) = s;
      }
  return out;
}

}  // namespace

NdArray Spray::operator()(const JetPoint& u) const {
  NdArray out = eval(u);
  if (out.shape() != std::vector<std::size_t>{sz(n), sz(p), sz(p)})
    throw std::logic_error("spray '" + name + "' returned a wrongly shaped array");
  return out;
}

Spray zero_spray(SprayKind kind, int p, int n) {
  Spray s;
  s.kind = kind;
  s.name = "zero";
  s.p = p;
  s.n = n;
  s.eval = [p, n](const JetPoint&) { return spray_shape(p, n); };
  s.rechart = [kind, p, n](const ChangeMap&) { return zero_spray(kind, p, n); };
  s.jet_derivative = [p, n](const JetPoint&) { return NdArray({sz(n), sz(p), sz(p), sz(n), sz(p)}); };
  return s;
}

Spray canonical_temporal(const Metric& h, int n) {
  if (h.factor() != Factor::temporal) throw std::invalid_argument("canonical_temporal: metric must live on T");
  const int p = h.dim();
  Spray s;
  s.kind = SprayKind::temporal;
  s.name = "canonical_temporal(" + h.name() + ")";
  s.p = p;
  s.n = n;
  s.eval = [h, p, n](const JetPoint& u) {
    const NdArray G = christoffel(h, as_span(u.t));
    NdArray out = spray_shape(p, n);
    for (std::size_t j = 0; j < sz(n); ++j)
      for (std::size_t b = 0; b < sz(p); ++b)
        for (std::size_t a = 0; a < sz(p); ++a) {
          double s = 0.0;
          for (std::size_t g = 0; g < sz(p); ++g) s += G(g, a, b) * u.v(ix(j), ix(g));
          out(j, b, a) = -0.5 * s;
        }
    return out;
  };
  s.jet_derivative = [h, p, n](const JetPoint& u) {
    const NdArray G = christoffel(h, as_span(u.t));
    NdArray out({sz(n), sz(p), sz(p), sz(n), sz(p)});
    for (std::size_t j = 0; j < sz(n); ++j)
      for (std::size_t b = 0; b < sz(p); ++b)
        for (std::size_t a = 0; a < sz(p); ++a)
          for (std::size_t g = 0; g < sz(p); ++g) out(j, b, a, j, g) = -0.5 * G(g, a, b);
    return out;
  };
  s.rechart = [h, n](const ChangeMap& c) { return canonical_temporal(h.pullback(c), n); };
  return s;
}

Spray canonical_spatial(const Metric& phi, int p) {
  if (phi.factor() != Factor::spatial) throw std::invalid_argument("canonical_spatial: metric must live on M");
  const int n = phi.dim();
  Spray s;
  s.kind = SprayKind::spatial;
  s.name = "canonical_spatial(" + phi.name() + ")";
  s.p = p;
  s.n = n;
  s.eval = [phi, p, n](const JetPoint& u) {
    const NdArray G = christoffel(phi, as_span(u.x));
    NdArray out = spray_shape(p, n);
    for (std::size_t i = 0; i < sz(n); ++i)
      for (std::size_t a = 0; a < sz(p); ++a)
        for (std::size_t b = 0; b < sz(p); ++b) {
          double s = 0.0;
          for (std::size_t j = 0; j < sz(n); ++j)
            for (std::size_t k = 0; k < sz(n); ++k) s += G(i, j, k) * u.v(ix(j), ix(a)) * u.v(ix(k), ix(b));
          out(i, a, b) = 0.5 * s;
        }
    return out;
  };
  s.jet_derivative = [phi, p, n](const JetPoint& u) {
    const NdArray G = christoffel(phi, as_span(u.x));
    NdArray out({sz(n), sz(p), sz(p), sz(n), sz(p)});
    for (std::size_t i = 0; i < sz(n); ++i)
      for (std::size_t a = 0; a < sz(p); ++a)
        for (std::size_t b = 0; b < sz(p); ++b)
          for (std::size_t m = 0; m < sz(n); ++m)
            for (std::size_t k = 0; k < sz(n); ++k) {
              // d/dv(m, a) of the first factor, d/dv(m, b) of the second.
              out(i, a, b, m, a) += 0.5 * G(i, m, k) * u.v(ix(k), ix(b));
              out(i, a, b, m, b) += 0.5 * G(i, k, m) * u.v(ix(k), ix(a));
            }
    return out;
  };
  s.rechart = [phi, p](const ChangeMap& c) { return canonical_spatial(phi.pullback(c), p); };
  return s;
}

NdArray transform_temporal(const NdArray& H, const JetChange& jc) {
  NdArray out = homogeneous(H, jc);
  const Eigen::MatrixXd& B = jc.blocks.temporal_inverse;
  const std::size_t n = H.extent(0);
  const std::size_t p = H.extent(1);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t m = 0; m < p; ++m)
      for (std::size_t g = 0; g < p; ++g) {
        double s = 0.0;
        for (std::size_t a = 0; a < p; ++a) s += B(ix(a), ix(g)) * jc.dv_dt(k, m, a);
        out(k, m, g) -= 0.5 * s;
      }
  return out;
}

NdArray transform_spatial(const NdArray& G, const JetChange& jc) {
  NdArray out = homogeneous(G, jc);
  const Eigen::MatrixXd& Ai = jc.blocks.spatial_inverse;
  const Eigen::MatrixXd& vt = jc.image.v;
  const std::size_t n = G.extent(0);
  const std::size_t p = G.extent(1);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t m = 0; m < p; ++m)
      for (std::size_t g = 0; g < p; ++g) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) s += Ai(ix(i), ix(j)) * jc.dv_dx(k, m, i) * vt(ix(j), ix(g));
        out(k, m, g) -= 0.5 * s;
      }
  return out;
}

NdArray transform_spray(const Spray& s, const ChangeMap& c, const JetPoint& u) {
  const JetChange jc = jet_change(c, u);
  return s.kind == SprayKind::temporal ? transform_temporal(s(u), jc) : transform_spatial(s(u), jc);
}

Verdict check_spray_law(const Spray& s, std::span<const ChangeMap> changes, std::span<const JetPoint> points,
                        double tol) {
  LawCheck check = [&s](const ChangeMap& c) {
    auto native = std::make_shared<Spray>(s.rechart(c));
    return [&s, &c, native](const JetPoint& u) {
      const JetChange jc = jet_change(c, u);
      NdArray pred = s.kind == SprayKind::temporal ? transform_temporal(s(u), jc) : transform_spatial(s(u), jc);
      return std::pair{std::move(pred), (*native)(jc.image)};
    };
  };
  return run_law_check(check, changes, points, tol);
}

DTensorField spray_as_dtensor(const Spray& s) {
  DTensorField f;
  f.name = s.name;
  f.p = s.p;
  f.n = s.n;
  f.signature = IndexSignature::parse("U(i,a);L(b)");
  f.components = [s](const JetPoint& u) { return s(u).reshaped({sz(s.n * s.p), sz(s.p)}); };
  f.rechart = [s](const ChangeMap& c) { return spray_as_dtensor(s.rechart(c)); };
  return f;
}

Spray affine_combination(double l, const Spray& s1, const Spray& s2) {
  if (s1.kind != s2.kind || s1.p != s2.p || s1.n != s2.n)
    throw std::invalid_argument("affine_combination: sprays of different kind or dimension");
  Spray s;
  s.kind = s1.kind;
  s.name = "combination(" + s1.name + "," + s2.name + ")";
  s.p = s1.p;
  s.n = s1.n;
  s.eval = [l, s1, s2](const JetPoint& u) { return l * s1(u) + (1.0 - l) * s2(u); };
  if (s1.jet_derivative && s2.jet_derivative)
    s.jet_derivative = [l, s1, s2](const JetPoint& u) {
      return l * s1.jet_derivative(u) + (1.0 - l) * s2.jet_derivative(u);
    };
  s.rechart = [l, s1, s2](const ChangeMap& c) { return affine_combination(l, s1.rechart(c), s2.rechart(c)); };
  return s;
}

DTensorField spray_difference(const Spray& s1, const Spray& s2) {
  if (s1.kind != s2.kind || s1.p != s2.p || s1.n != s2.n)
    throw std::invalid_argument("spray_difference: sprays of different kind or dimension");
  DTensorField f;
  f.name = s1.name + " - " + s2.name;
  f.p = s1.p;
  f.n = s1.n;
  f.signature = IndexSignature::parse("U(i,a);L(b)");
  f.components = [s1, s2](const JetPoint& u) {
    return (s1(u) - s2(u)).reshaped({sz(s1.n * s1.p), sz(s1.p)});
  };
  f.rechart = [s1, s2](const ChangeMap& c) { return spray_difference(s1.rechart(c), s2.rechart(c)); };
  return f;
}

DTensorField decompose(const Spray& s, const Metric& h, const Metric& phi) {
  const Spray canonical = s.kind == SprayKind::temporal ? canonical_temporal(h, s.n) : canonical_spatial(phi, s.p);
  DTensorField f = spray_difference(s, canonical);
  f.name = "remainder(" + s.name + ")";
  return f;
}

HSpray h_trace(const Spray& s, const Metric& h) {
  if (h.dim() != s.p) throw std::invalid_argument("h_trace: metric dimension differs from p");
  const int p = s.p;
  const int n = s.n;
  HSpray out;
  out.kind = s.kind;
  out.name = "trace(" + s.name + ")";
  out.p = p;
  out.n = n;
  out.eval = [s, h, p, n](const JetPoint& u) {
    const Eigen::MatrixXd hi = metric_inverse(h, as_span(u.t));
    const NdArray S = s(u);
    Eigen::VectorXd tr = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < sz(n); ++i)
      for (std::size_t a = 0; a < sz(p); ++a)
        for (std::size_t b = 0; b < sz(p); ++b) tr(ix(i)) += hi(ix(a), ix(b)) * S(i, a, b);
    return tr;
  };
  if (s.jet_derivative) {
    out.jet_gradient = [s, h, p, n](const JetPoint& u) {
      const Eigen::MatrixXd hi = metric_inverse(h, as_span(u.t));
      const NdArray dS = s.jet_derivative(u);
      NdArray g({sz(n), sz(n), sz(p)});
      for (std::size_t i = 0; i < sz(n); ++i)
        for (std::size_t a = 0; a < sz(p); ++a)
          for (std::size_t b = 0; b < sz(p); ++b)
            for (std::size_t j = 0; j < sz(n); ++j)
              for (std::size_t c = 0; c < sz(p); ++c) g(i, j, c) += hi(ix(a), ix(b)) * dS(i, a, b, j, c);
      return g;
    };
  } else {
    auto value = out.eval;
    out.jet_gradient = [value, p, n](const JetPoint& u) {
      NdArray g({sz(n), sz(n), sz(p)});
      const std::vector<double> z = u.flatten();
      for (int i = 0; i < n; ++i) {
        ScalarField f = [value, p, n, i](std::span<const double> w) {
          return value(JetPoint::unflatten(p, n, w))(i);
        };
        for (int j = 0; j < n; ++j)
          for (int c = 0; c < p; ++c)
            g(i, j, c) = numdiff::fd_partial(f, z, static_cast<std::size_t>(jet_coordinate(p, n, j, c)));
      }
      return g;
    };
  }
  out.rechart = [s, h](const ChangeMap& c) { return h_trace(s.rechart(c), h.pullback(c)); };
  return out;
}

Spray spray_from_hspray(const HSpray& hs, const Metric& h) {
  if (hs.p != 1 || h.dim() != 1)
    throw std::invalid_argument("spray_from_hspray: a spray is determined by its h-trace only when dim T = 1");
  const int n = hs.n;
  Spray s;
  s.kind = hs.kind;
  s.name = "spray(" + hs.name + ")";
  s.p = 1;
  s.n = n;
  s.eval = [hs, h, n](const JetPoint& u) {
    const double h11 = h.at(as_span(u.t))(0, 0);
    const Eigen::VectorXd g = hs.eval(u);
    NdArray out = spray_shape(1, n);
    for (std::size_t k = 0; k < sz(n); ++k) out(k, 0, 0) = h11 * g(ix(k));
    return out;
  };
  if (hs.jet_gradient)
    s.jet_derivative = [hs, h, n](const JetPoint& u) {
      const double h11 = h.at(as_span(u.t))(0, 0);
      const NdArray g = hs.jet_gradient(u);
      NdArray out({sz(n), 1, 1, sz(n), 1});
      for (std::size_t k = 0; k < sz(n); ++k)
        for (std::size_t j = 0; j < sz(n); ++j) out(k, 0, 0, j, 0) = h11 * g(k, j, 0);
      return out;
    };
  if (hs.rechart) s.rechart = [hs, h](const ChangeMap& c) { return spray_from_hspray(hs.rechart(c), h.pullback(c)); };
  return s;
}

}  // namespace jetflow
