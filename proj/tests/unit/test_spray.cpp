#include <gtest/gtest.h>

#include <cmath>

#include "jetflow/spray.hpp"
#include "testkit.hpp"

using namespace jetflow;

namespace {

struct Geometry {
  const char* label;
  Metric h;
  Metric phi;
  int p;
  int n;
};

std::vector<Geometry> catalog() {
  const Expr lambda = parse("0.2*t1 - 0.1*t2^2");
  return {
      {"exp1d/sphere", catalog_metric("exp1d", Factor::temporal, 1), catalog_metric("sphere", Factor::spatial, 2), 1, 2},
      {"exp1d/hyperbolic", catalog_metric("exp1d", Factor::temporal, 1), catalog_metric("hyperbolic", Factor::spatial, 2),
       1, 2},
      {"conformal/sphere", catalog_metric("conformal2d", Factor::temporal, 2, lambda),
       catalog_metric("sphere", Factor::spatial, 2), 2, 2},
      {"conformal/hyperbolic", catalog_metric("conformal2d", Factor::temporal, 2, lambda),
       catalog_metric("hyperbolic", Factor::spatial, 2), 2, 2},
  };
}

double max_abs(const NdArray& a) {
  double w = 0;
  for (double d : a.data()) w = std::max(w, std::abs(d));
  return w;
}

double max_abs_diff(const NdArray& a, const NdArray& b) {
  double w = 0;
  for (std::size_t k = 0; k < a.data().size(); ++k) w = std::max(w, std::abs(a.data()[k] - b.data()[k]));
  return w;
}

JetPoint sphere_jet() {
  JetPoint u{Eigen::VectorXd::Constant(1, 0.3), Eigen::Vector2d(M_PI / 4, 0.5), Eigen::MatrixXd(2, 1)};
  u.v << 1.0, 2.0;
  return u;
}

// Homogeneous part of the spray laws computed by explicit loops.
NdArray homogeneous_oracle(const NdArray& S, const JacobianBlocks& jb) {
  const auto n = static_cast<int>(S.extent(0));
  const auto p = static_cast<int>(S.extent(1));
  NdArray out(S.shape());
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < p; ++m)
      for (int g = 0; g < p; ++g) {
        double acc = 0;
        for (int j = 0; j < n; ++j)
          for (int b = 0; b < p; ++b)
            for (int a = 0; a < p; ++a)
              acc += jb.spatial(k, j) * jb.temporal_inverse(b, m) * jb.temporal_inverse(a, g) * S(j, b, a);
        out(k, m, g) = acc;
      }
  return out;
}

}  // namespace

TEST(CanonicalTemporal, FlatAndExp1d) {
  const testkit::Setting s = testkit::setting(1, 2);
  const JetPoint u = testkit::jets("spray/exp1d", s, 1)[0];
  EXPECT_EQ(max_abs(canonical_temporal(catalog_metric("euclidean", Factor::temporal, 1), 2)(u)), 0.0);
  const NdArray H = canonical_temporal(catalog_metric("exp1d", Factor::temporal, 1), 2)(u);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(H(j, 0, 0), -0.5 * u.v(j, 0), 1e-14);
}

TEST(CanonicalSpatial, FlatAndSphere) {
  const JetPoint u = sphere_jet();
  EXPECT_EQ(max_abs(canonical_spatial(catalog_metric("euclidean", Factor::spatial, 2), 1)(u)), 0.0);
  const NdArray G = canonical_spatial(catalog_metric("sphere", Factor::spatial, 2), 1)(u);
  EXPECT_NEAR(G(0, 0, 0), -1.0, 1e-12);
  // gamma^2_12 = cot(pi/4) = 1 on both mixed slots: 1/2 (1 + 1) * 1 * 2.
  EXPECT_NEAR(G(1, 0, 0), 2.0, 1e-12);
}

TEST(SprayLaw, IdentityAndAffine) {
  const Geometry g = catalog()[2];
  const testkit::Setting s = testkit::setting(g.p, g.n);
  const JetPoint u = testkit::jets("spray/affine", s, 1)[0];
  const Spray H = canonical_temporal(g.h, g.n);
  const Spray G = canonical_spatial(g.phi, g.p);
  EXPECT_LT(max_abs_diff(transform_spray(H, ChangeMap::identity(g.p, g.n), u), H(u)), 1e-15);
  EXPECT_LT(max_abs_diff(transform_spray(G, ChangeMap::identity(g.p, g.n), u), G(u)), 1e-15);

  Rng rng = Rng(testkit::kSeed).stream("spray/affine");
  const ChangeMap c = charts::random_affine(rng, g.p, g.n, "aff");
  const JacobianBlocks jb = jacobian_blocks(c, as_span(u.t), as_span(u.x));
  EXPECT_LT(max_abs_diff(transform_spray(H, c, u), homogeneous_oracle(H(u), jb)), 1e-12);
  EXPECT_LT(max_abs_diff(transform_spray(G, c, u), homogeneous_oracle(G(u), jb)), 1e-12);
}

TEST(SprayProperty, CanonicalSpraysObeyTheirLaws) {
  for (const Geometry& g : catalog()) {
    const testkit::Setting s = testkit::setting(g.p, g.n);
    const auto cs = testkit::changes(std::string("spray/law/") + g.label, s, 10);
    const auto us = testkit::jets(std::string("spray/law/") + g.label, s, 10);
    for (const Spray& sp : {canonical_temporal(g.h, g.n), canonical_spatial(g.phi, g.p)}) {
      const Verdict v = check_spray_law(sp, cs, us, 1e-8);
      EXPECT_TRUE(v.pass) << g.label << " " << sp.name << " " << v.max_rel_err;
      EXPECT_EQ(v.pairs, 100u);
    }
  }
}

TEST(SprayProperty, WrongKindLawFails) {
  // A temporal spray checked against the spatial law, and vice versa.
  const Geometry g = catalog()[0];
  const testkit::Setting s = testkit::setting(g.p, g.n);
  const auto cs = testkit::changes("spray/wrong", s, 6);
  const auto us = testkit::jets("spray/wrong", s, 5);
  Spray swapped = canonical_spatial(g.phi, g.p);
  swapped.kind = SprayKind::temporal;
  const Spray base = canonical_spatial(g.phi, g.p);
  swapped.rechart = [base](const ChangeMap& c) {
    Spray r = base.rechart(c);
    r.kind = SprayKind::temporal;
    return r;
  };
  EXPECT_FALSE(check_spray_law(swapped, cs, us, 1e-8).pass);
}

TEST(SprayProperty, SprayCoefficientsAreNotDTensors) {
  const Geometry g = catalog()[0];
  const testkit::Setting s = testkit::setting(g.p, g.n);
  const Verdict v = is_dtensor(spray_as_dtensor(canonical_temporal(g.h, g.n)), testkit::changes("spray/neg", s, 6),
                               testkit::jets("spray/neg", s, 5), 1e-9);
  EXPECT_FALSE(v.pass);
  ASSERT_TRUE(v.witness.has_value());
  EXPECT_NE(v.witness->change.find("nonlinear"), std::string::npos) << v.witness->change;
}

TEST(SprayProperty, AffineCombinationsAreSprays) {
  const Expr lambda = parse("0.2*t1 - 0.1*t2^2");
  const Metric h1 = catalog_metric("euclidean", Factor::temporal, 2);
  const Metric h2 = catalog_metric("conformal2d", Factor::temporal, 2, lambda);
  const Metric p1 = catalog_metric("sphere", Factor::spatial, 2);
  const Metric p2 = catalog_metric("hyperbolic", Factor::spatial, 2);
  const testkit::Setting s = testkit::setting(2, 2);
  const auto cs = testkit::changes("spray/affine-comb", s, 6);
  const auto us = testkit::jets("spray/affine-comb", s, 5);
  Rng rng = Rng(testkit::kSeed).stream("spray/lambda");
  for (int k = 0; k < 3; ++k) {
    const double l = rng.uniform(-1.0, 2.0);
    EXPECT_TRUE(check_spray_law(affine_combination(l, canonical_temporal(h1, 2), canonical_temporal(h2, 2)), cs, us,
                                1e-8)
                    .pass);
    EXPECT_TRUE(
        check_spray_law(affine_combination(l, canonical_spatial(p1, 2), canonical_spatial(p2, 2)), cs, us, 1e-8).pass);
  }
}

TEST(SprayProperty, DifferencesAreDTensors) {
  const testkit::Setting s = testkit::setting(1, 2);
  const auto cs = testkit::changes("spray/diff", s, 10);
  const auto us = testkit::jets("spray/diff", s, 10);
  const Verdict vt = is_dtensor(spray_difference(canonical_temporal(catalog_metric("exp1d", Factor::temporal, 1), 2),
                                                 canonical_temporal(catalog_metric("euclidean", Factor::temporal, 1), 2)),
                                cs, us, 1e-9);
  EXPECT_TRUE(vt.pass) << vt.max_rel_err;
  const Verdict vs = is_dtensor(spray_difference(canonical_spatial(catalog_metric("sphere", Factor::spatial, 2), 1),
                                                 canonical_spatial(catalog_metric("hyperbolic", Factor::spatial, 2), 1)),
                                cs, us, 1e-9);
  EXPECT_TRUE(vs.pass) << vs.max_rel_err;
}

TEST(Decompose, CanonicalRemainderVanishesAndRecoversAddedTensor) {
  const Geometry g = catalog()[2];
  const testkit::Setting s = testkit::setting(g.p, g.n);
  const JetPoint u = testkit::jets("spray/decompose", s, 1)[0];
  EXPECT_LT(max_abs(decompose(canonical_temporal(g.h, g.n), g.h, g.phi)(u)), 1e-15);
  EXPECT_LT(max_abs(decompose(canonical_spatial(g.phi, g.p), g.h, g.phi)(u)), 1e-15);

  // canonical + L, with L the Liouville d-tensor of h reshaped to spray layout.
  const DTensorField L = liouville_l_field(g.h, g.n);
  Spray plus = canonical_temporal(g.h, g.n);
  const auto base_eval = plus.eval;
  plus.eval = [base_eval, L, g](const JetPoint& w) {
    NdArray out = base_eval(w);
    const NdArray l = L(w);
    // L has slots (i,a), b, g; contract the last slot with a fixed covector.
    for (int j = 0; j < g.n; ++j)
      for (int b = 0; b < g.p; ++b)
        for (int a = 0; a < g.p; ++a) out(j, b, a) += l(j * g.p + b, a, 0);
    return out;
  };
  plus.jet_derivative = nullptr;
  const DTensorField rem = decompose(plus, g.h, g.phi);
  const NdArray r = rem(u);
  const NdArray l = L(u);
  for (int j = 0; j < g.n; ++j)
    for (int b = 0; b < g.p; ++b)
      for (int a = 0; a < g.p; ++a) EXPECT_NEAR(r(j * g.p + b, a), l(j * g.p + b, a, 0), 1e-14);
}

TEST(HTrace, Examples) {
  const Metric flat1 = catalog_metric("euclidean", Factor::temporal, 1);
  const JetPoint u = sphere_jet();
  const Spray G = canonical_spatial(catalog_metric("sphere", Factor::spatial, 2), 1);
  const Eigen::VectorXd tr = h_trace(G, flat1).eval(u);
  EXPECT_NEAR(tr(0), -1.0, 1e-12);
  EXPECT_NEAR(tr(1), G(u)(1, 0, 0), 1e-15);
  EXPECT_EQ(h_trace(canonical_temporal(flat1, 2), flat1).eval(u).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HTrace, ConformalTraceUsesInverseMetric) {
  const Expr lambda = parse("0.2*t1 - 0.1*t2^2");
  const Metric h = catalog_metric("conformal2d", Factor::temporal, 2, lambda);
  const Spray G = canonical_spatial(catalog_metric("sphere", Factor::spatial, 2), 2);
  const testkit::Setting s = testkit::setting(2, 2);
  const JetPoint u = testkit::jets("spray/trace", s, 1)[0];
  const double e = std::exp(-2 * eval(lambda, {{"t1", u.t(0)}, {"t2", u.t(1)}}));
  const NdArray c = G(u);
  const Eigen::VectorXd tr = h_trace(G, h).eval(u);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(tr(i), e * (c(i, 0, 0) + c(i, 1, 1)), 1e-12);
}

TEST(HTrace, JetGradientMatchesFiniteDifference) {
  const Expr lambda = parse("0.2*t1 - 0.1*t2^2");
  const Metric h = catalog_metric("conformal2d", Factor::temporal, 2, lambda);
  const HSpray hs = h_trace(canonical_spatial(catalog_metric("hyperbolic", Factor::spatial, 2), 2), h);
  const testkit::Setting s = testkit::setting(2, 2);
  for (const JetPoint& u : testkit::jets("spray/grad", s, 5)) {
    const NdArray grad = hs.jet_gradient(u);
    const std::vector<double> z = u.flatten();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int g = 0; g < 2; ++g) {
          const double fd = numdiff::fd_partial(
              [&hs, i](std::span<const double> w) { return hs.eval(JetPoint::unflatten(2, 2, w))(i); }, z,
              static_cast<std::size_t>(jet_coordinate(2, 2, j, g)));
          EXPECT_NEAR(grad(i, j, g), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
  }
}

TEST(SprayFromHSpray, RoundTripAndRejectsMultiTime) {
  const Metric h = catalog_metric("exp1d", Factor::temporal, 1);
  const HSpray hs = h_trace(canonical_spatial(catalog_metric("sphere", Factor::spatial, 2), 1), h);
  const Spray back = spray_from_hspray(hs, h);
  const testkit::Setting s = testkit::setting(1, 2);
  for (const JetPoint& u : testkit::jets("spray/roundtrip", s, 10)) {
    const Eigen::VectorXd want = hs.eval(u);
    const Eigen::VectorXd got = h_trace(back, h).eval(u);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-14);
  }

  const Metric flat = catalog_metric("euclidean", Factor::temporal, 1);
  const HSpray hf = h_trace(canonical_spatial(catalog_metric("sphere", Factor::spatial, 2), 1), flat);
  const JetPoint u = sphere_jet();
  EXPECT_EQ(spray_from_hspray(hf, flat)(u)(0, 0, 0), hf.eval(u)(0));

  const Metric h2 = catalog_metric("euclidean", Factor::temporal, 2);
  const HSpray hs2 = h_trace(canonical_spatial(catalog_metric("sphere", Factor::spatial, 2), 2), h2);
  EXPECT_THROW(spray_from_hspray(hs2, h2), std::invalid_argument);
}
