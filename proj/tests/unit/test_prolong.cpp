#include <gtest/gtest.h>

#include <cmath>

#include "jetflow/prolong.hpp"
#include "testkit.hpp"

using namespace jetflow;

namespace {

std::vector<Expr> exprs(std::initializer_list<const char*> srcs) {
  std::vector<Expr> out;
  for (const char* s : srcs) out.push_back(parse(s));
  return out;
}

JetPoint jet(std::vector<double> t, std::vector<double> x, std::vector<double> v_rowmajor) {
  const int p = static_cast<int>(t.size()), n = static_cast<int>(x.size());
  JetPoint u{Eigen::Map<Eigen::VectorXd>(t.data(), p), Eigen::Map<Eigen::VectorXd>(x.data(), n),
             Eigen::MatrixXd(n, p)};
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a) u.v(i, a) = v_rowmajor[static_cast<std::size_t>(i * p + a)];
  return u;
}

// Fields on T x M with p = 1, n = 2 whose flows stay inside the sampling box for small times.
std::vector<BaseVectorField> field_catalog() {
  return {
      BaseVectorField(1, 2, exprs({"0"}), exprs({"x1", "0"})),
      BaseVectorField(1, 2, exprs({"t1 + 0.5*x2"}), exprs({"0", "0"})),
      BaseVectorField(1, 2, exprs({"1 + 0.2*sin(x1)"}), exprs({"x1^2 - t1*x2", "0.3*cos(t1 + x1)"})),
  };
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(BaseVectorField, RejectsJetVariables) {
  EXPECT_THROW(BaseVectorField(1, 1, exprs({"x1_1"}), exprs({"0"})), std::invalid_argument);
  EXPECT_THROW(BaseVectorField(1, 1, exprs({"0", "0"}), exprs({"0"})), std::invalid_argument);
}

TEST(BaseVectorField, PushforwardIsJacobianTimesField) {
  const testkit::Setting s = testkit::setting(2, 2);
  const BaseVectorField X(2, 2, exprs({"t1*x2", "1 + x1"}), exprs({"sin(t2)", "x1*x2 - t1"}));
  for (const ChangeMap& c : testkit::changes("prolong/push", s, 4))
    for (const JetPoint& u : testkit::jets("prolong/push", s, 3)) {
      const JacobianBlocks jb = jacobian_blocks(c, as_span(u.t), as_span(u.x));
      const Eigen::VectorXd base = X.at(as_span(u.t), as_span(u.x));
      const Eigen::VectorXd tt = c.map_t(as_span(u.t)), xt = c.map_x(as_span(u.x));
      const Eigen::VectorXd pushed = X.pushforward(c).at(as_span(tt), as_span(xt));
      EXPECT_LT((pushed.head(2) - jb.temporal * base.head(2)).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT((pushed.tail(2) - jb.spatial * base.tail(2)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(TotalDerivative, Examples) {
  const JetPoint u = jet({2.0}, {3.0}, {5.0});
  EXPECT_DOUBLE_EQ(total_derivative(parse("t1*x1"), u, 0), 13.0);
  EXPECT_DOUBLE_EQ(total_derivative(parse("t1"), u, 0), 1.0);
  const JetPoint w = jet({0.1, 0.2}, {0.3}, {-1.5, 2.5});
  EXPECT_DOUBLE_EQ(total_derivative(parse("x1"), w, 0), -1.5);
  EXPECT_DOUBLE_EQ(total_derivative(parse("x1"), w, 1), 2.5);
}

TEST(TotalDerivative, ExpressionFormMatches) {
  const Expr f = parse("sin(t1)*x2 + t2*x1^2");
  const testkit::Setting s = testkit::setting(2, 2);
  const auto names = jet_names(2, 2);
  for (const JetPoint& u : testkit::jets("prolong/dexpr", s, 5)) {
    const CompiledExpr c0(total_derivative_expr(f, 2, 2, 0), names), c1(total_derivative_expr(f, 2, 2, 1), names);
    const auto z = u.flatten();
    EXPECT_NEAR(c0(z), total_derivative(f, u, 0), 1e-14);
    EXPECT_NEAR(c1(z), total_derivative(f, u, 1), 1e-14);
  }
}

TEST(TotalDerivative, AdaptedFormEqualsPlainForBaseFunctions) {
  const Expr lambda = parse("0.2*t1 - 0.1*t2^2");
  const NonlinearConnection con = canonical_connection(catalog_metric("conformal2d", Factor::temporal, 2, lambda),
                                                       catalog_metric("sphere", Factor::spatial, 2));
  const Expr f = parse("t1*x1 + exp(t2)*cos(x2)");
  const testkit::Setting s = testkit::setting(2, 2);
  for (const JetPoint& u : testkit::jets("prolong/adapted", s, 10))
    for (int a = 0; a < 2; ++a) {
      EXPECT_EQ(total_derivative_adapted(f, con, u, a), total_derivative(f, u, a));
      EXPECT_EQ(total_derivative_adapted(f, zero_connection(2, 2), u, a), total_derivative(f, u, a));
    }
  const NonlinearConnection c1 = canonical_connection(catalog_metric("exp1d", Factor::temporal, 1),
                                                      catalog_metric("sphere", Factor::spatial, 1 + 1));
  const JetPoint u = jet({2.0}, {1.0, 3.0}, {5.0, 0.5});
  EXPECT_DOUBLE_EQ(total_derivative_adapted(parse("t1*x1"), c1, u, 0), 1.0 + 2.0 * 5.0);
}

TEST(TotalDerivative, IsTemporalCovector) {
  const testkit::Setting s = testkit::setting(2, 2);
  const Verdict v = is_dtensor(total_derivative_field(parse("t1*x1 + sin(t2)*x2^2"), 2, 2),
                               testkit::changes("prolong/dt", s, 10), testkit::jets("prolong/dt", s, 10), 1e-9);
  EXPECT_TRUE(v.pass) << v.max_rel_err;
  EXPECT_EQ(v.pairs, 100u);
}

TEST(OlverProlong, Examples) {
  const JetPoint u = jet({0.3, -0.2}, {0.7, 1.1}, {1.0, 2.0, 3.0, 4.0});
  const JetVector d1 = olver_prolong(BaseVectorField(2, 2, exprs({"1", "0"}), exprs({"0", "0"})))(u);
  EXPECT_EQ(max_abs(d1.v), 0.0);
  EXPECT_EQ(d1.t(0), 1.0);

  const JetVector sx = olver_prolong(BaseVectorField(2, 2, exprs({"0", "0"}), exprs({"x1", "0"})))(u);
  EXPECT_DOUBLE_EQ(sx.v(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(sx.v(0, 1), 2.0);
  EXPECT_EQ(sx.v.row(1).cwiseAbs().maxCoeff(), 0.0);

  const JetPoint w = jet({0.4}, {0.7, 1.1}, {1.5, -2.5});
  const JetVector st = olver_prolong(BaseVectorField(1, 2, exprs({"t1"}), exprs({"0", "0"})))(w);
  EXPECT_DOUBLE_EQ(st.v(0, 0), -1.5);
  EXPECT_DOUBLE_EQ(st.v(1, 0), 2.5);
}

TEST(ProlongProperty, Linearity) {
  const BaseVectorField X(2, 2, exprs({"t1*x2", "1 + x1"}), exprs({"sin(t2)", "x1*x2 - t1"}));
  const BaseVectorField Y(2, 2, exprs({"x1^2", "t2"}), exprs({"cos(x2)", "t1*t2"}));
  const testkit::Setting s = testkit::setting(2, 2);
  Rng rng = Rng(testkit::kSeed).stream("prolong/linear");
  for (const JetPoint& u : testkit::jets("prolong/linear", s, 20)) {
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    const JetVector lhs = olver_prolong(a * X + b * Y)(u);
    const JetVector px = olver_prolong(X)(u), py = olver_prolong(Y)(u);
    EXPECT_LT(max_abs(lhs.v - (a * px.v + b * py.v)), 1e-12);
    EXPECT_LT(max_abs(lhs.x - (a * px.x + b * py.x)), 1e-12);
  }
}

TEST(FlowCheck, ZeroAndTranslations) {
  const JetPoint u = jet({0.2}, {0.8, 1.1}, {0.6, -0.4});
  EXPECT_EQ(flow_prolong_check(BaseVectorField(1, 2, exprs({"0"}), exprs({"0", "0"})), u, 1e-3), 0.0);
  EXPECT_LT(flow_prolong_check(BaseVectorField(1, 2, exprs({"1"}), exprs({"0", "0"})), u, 1e-3), 1e-10);
  EXPECT_LT(flow_prolong_check(BaseVectorField(1, 2, exprs({"0.5"}), exprs({"2", "-1"})), u, 1e-2), 1e-8);
  EXPECT_THROW(flow_prolong_check(BaseVectorField(1, 2, exprs({"1"}), exprs({"0", "0"})), u, 0.0),
               std::invalid_argument);
}

TEST(FlowCheck, FlowJetOfScalingField) {
  // x1 d/dx1 flows x1 -> e^s x1, so the jet row scales by e^s.
  const JetPoint u = jet({0.2}, {0.8, 1.1}, {0.6, -0.4});
  const JetPoint w = flow_jet(BaseVectorField(1, 2, exprs({"0"}), exprs({"x1", "0"})), u, 0.3);
  EXPECT_NEAR(w.x(0), 0.8 * std::exp(0.3), 1e-9);
  EXPECT_NEAR(w.v(0, 0), 0.6 * std::exp(0.3), 1e-7);
  EXPECT_NEAR(w.v(1, 0), -0.4, 1e-9);
}

TEST(ProlongProperty, FlowDiscrepancyIsSecondOrder) {
  const testkit::Setting s = testkit::setting(1, 2);
  for (const BaseVectorField& X : field_catalog())
    for (const JetPoint& u : testkit::jets("prolong/flow", s, 3)) {
      const double coarse = flow_prolong_check(X, u, 2e-2);
      const double fine = flow_prolong_check(X, u, 1e-2);
      EXPECT_GT(coarse, 1e-7);
      EXPECT_GE(coarse / fine, 3.5) << coarse << " " << fine;
      EXPECT_LE(coarse / fine, 4.5) << coarse << " " << fine;
    }
}

TEST(HorizontalLift, ZeroAndFlat) {
  const BaseVectorField X(1, 2, exprs({"t1 + x1"}), exprs({"x2", "sin(t1)"}));
  const JetPoint u = jet({0.2}, {0.8, 1.1}, {0.6, -0.4});
  const JetVector z = horizontal_lift(X, zero_connection(1, 2))(u);
  EXPECT_EQ(max_abs(z.v), 0.0);
  const JetVector f = horizontal_lift(X, canonical_connection(catalog_metric("euclidean", Factor::temporal, 1),
                                                              catalog_metric("euclidean", Factor::spatial, 2)))(u);
  EXPECT_EQ(max_abs(f.v), 0.0);
  const NonlinearConnection con = canonical_connection(catalog_metric("exp1d", Factor::temporal, 1),
                                                       catalog_metric("sphere", Factor::spatial, 2));
  const JetVector h = horizontal_lift(X, con)(u);
  const Eigen::VectorXd base = X.at(as_span(u.t), as_span(u.x));
  EXPECT_EQ(h.t, base.head(1));
  EXPECT_EQ(h.x, base.tail(2));
  // Vertical part is -(M X^a + N X^i).
  const ConnectionCoefficients k = con(u);
  for (int j = 0; j < 2; ++j) {
    double want = -k.M(j, 0, 0) * base(0);
    for (int i = 0; i < 2; ++i) want -= k.N(j, 0, i) * base(1 + i);
    EXPECT_NEAR(h.v(j, 0), want, 1e-15);
  }
}

TEST(VerticalGap, Examples) {
  const JetPoint u = jet({0.2}, {0.8, 1.1}, {0.6, -0.4});
  const NonlinearConnection con = canonical_connection(catalog_metric("exp1d", Factor::temporal, 1),
                                                       catalog_metric("sphere", Factor::spatial, 2));
  EXPECT_EQ(max_abs(vertical_gap(BaseVectorField(1, 2, exprs({"0"}), exprs({"0", "0"})), con, u)), 0.0);
  const NonlinearConnection flat = canonical_connection(catalog_metric("euclidean", Factor::temporal, 1),
                                                        catalog_metric("euclidean", Factor::spatial, 2));
  EXPECT_EQ(max_abs(vertical_gap(BaseVectorField(1, 2, exprs({"1"}), exprs({"0", "0"})), flat, u)), 0.0);
  const BaseVectorField X(1, 2, exprs({"t1 + x1"}), exprs({"x2", "sin(t1)"}));
  EXPECT_LT(max_abs(vertical_gap(X, con, u) - (olver_prolong(X)(u).v - horizontal_lift(X, con)(u).v)), 1e-15);
}

TEST(ProlongProperty, VerticalGapIsDTensor) {
  const Expr lambda = parse("0.2*t1 - 0.1*t2^2");
  struct Case {
    int p;
    NonlinearConnection con;
    BaseVectorField X;
  };
  const std::vector<Case> cases{
      {1,
       canonical_connection(catalog_metric("exp1d", Factor::temporal, 1), catalog_metric("sphere", Factor::spatial, 2)),
       BaseVectorField(1, 2, exprs({"t1 + 0.3*x1"}), exprs({"x2*t1", "sin(x1)"}))},
      {2,
       canonical_connection(catalog_metric("conformal2d", Factor::temporal, 2, lambda),
                            catalog_metric("hyperbolic", Factor::spatial, 2)),
       BaseVectorField(2, 2, exprs({"1 + t2*x1", "t1^2"}), exprs({"x1*x2", "cos(t1) - x2"}))},
  };
  for (const Case& c : cases) {
    const testkit::Setting s = testkit::setting(c.p, 2);
    const Verdict v = is_dtensor(vertical_gap_field(c.X, c.con), testkit::changes("prolong/gap", s, 10),
                                 testkit::jets("prolong/gap", s, 10), 1e-9);
    EXPECT_TRUE(v.pass) << v.max_rel_err;
    // The prolongation alone is not tensorial.
    DTensorField pr = vertical_gap_field(c.X, zero_connection(c.p, 2));
    pr.rechart = [X = c.X, p = c.p](const ChangeMap& ch) { return vertical_gap_field(X.pushforward(ch), zero_connection(p, 2)); };
    EXPECT_FALSE(is_dtensor(pr, testkit::changes("prolong/gap", s, 10), testkit::jets("prolong/gap", s, 10), 1e-9).pass);
  }
}
