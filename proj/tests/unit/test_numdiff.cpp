#include <gtest/gtest.h>

#include <cmath>

#include "jetflow/charts.hpp"
#include "jetflow/numdiff.hpp"
#include "testkit.hpp"

using namespace jetflow;

namespace {

std::vector<Expr> exprs(std::initializer_list<const char*> srcs) {
  std::vector<Expr> out;
  for (const char* s : srcs) out.push_back(parse(s));
  return out;
}

double max_dev_from_identity(const Eigen::MatrixXd& m) {
  return (m - Eigen::MatrixXd::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(FdPartial, Examples) {
  const std::vector<double> three{3.0};
  const std::vector<double> zero{0.0};
  EXPECT_NEAR(numdiff::fd_partial([](std::span<const double> z) { return z[0] * z[0]; }, three, 0), 6.0, 1e-7);
  EXPECT_NEAR(numdiff::fd_partial([](std::span<const double>) { return 4.2; }, three, 0), 0.0, 1e-9);
  EXPECT_NEAR(numdiff::fd_partial([](std::span<const double> z) { return std::sin(z[0]); }, zero, 0), 1.0, 1e-9);
}

TEST(SecondPartial, Examples) {
  const std::vector<std::string> vars{"x1", "x2"};
  const std::vector<double> ones{1.0, 1.0};
  const Expr f = parse("x1^2*x2");
  EXPECT_DOUBLE_EQ(numdiff::second_partial(f, vars, ones, 0, 1), 2.0);
  EXPECT_DOUBLE_EQ(numdiff::second_partial(parse("3*x1 - x2 + 1"), vars, ones, 0, 0), 0.0);
  const std::vector<double> origin{0.0, 0.0};
  EXPECT_DOUBLE_EQ(numdiff::second_partial(parse("exp(x1)"), vars, origin, 0, 0), 1.0);

  const CompiledExpr fc(f, vars);
  EXPECT_NEAR(numdiff::second_partial([&fc](std::span<const double> z) { return fc(z); }, ones, 0, 1), 2.0, 1e-6);
  EXPECT_NEAR(numdiff::second_partial([&fc](std::span<const double> z) { return fc(z); }, ones, 0, 0), 2.0, 1e-6);
}

TEST(JacobianBlocks, Identity) {
  const ChangeMap id = ChangeMap::identity(2, 3);
  const std::vector<double> t{0.3, -0.2}, x{1.0, 2.0, 3.0};
  const JacobianBlocks b = jacobian_blocks(id, t, x);
  EXPECT_EQ(b.temporal, Eigen::MatrixXd::Identity(2, 2));
  EXPECT_EQ(b.spatial, Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(b.temporal_inverse, Eigen::MatrixXd::Identity(2, 2));
  EXPECT_EQ(b.spatial_inverse, Eigen::MatrixXd::Identity(3, 3));
}

TEST(JacobianBlocks, TimeDoubling) {
  const ChangeMap c("double", exprs({"2*t1"}), exprs({"x1"}), exprs({"t1/2"}), exprs({"x1"}));
  const std::vector<double> t{0.7}, x{0.1};
  const JacobianBlocks b = jacobian_blocks(c, t, x);
  EXPECT_DOUBLE_EQ(b.temporal(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(b.temporal_inverse(0, 0), 0.5);
}

TEST(JacobianBlocks, ShearAtOrigin) {
  const ChangeMap c("shear", exprs({"t1"}), exprs({"x1 + 0.1*sin(x2)", "x2"}), exprs({"t1"}),
                    exprs({"x1 - 0.1*sin(x2)", "x2"}));
  const std::vector<double> t{0.0}, x{0.0, 0.0};
  const JacobianBlocks b = jacobian_blocks(c, t, x);
  Eigen::MatrixXd want(2, 2);
  want << 1.0, 0.1, 0.0, 1.0;
  EXPECT_LT((b.spatial - want).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(max_dev_from_identity(b.spatial * b.spatial_inverse), 1e-12);
}

TEST(JacobianBlocks, SingularBlockAndDomain) {
  const ChangeMap flat("flat", exprs({"t1"}), exprs({"x1^3"}), exprs({"t1"}), exprs({"x1"}));
  const std::vector<double> t{0.0}, x{0.0};
  EXPECT_THROW(jacobian_blocks(flat, t, x), ChartError);

  const ChangeMap boxed("boxed", exprs({"t1"}), exprs({"x1"}), exprs({"t1"}), exprs({"x1"}), {{-1, 1}}, {{0, 1}});
  const std::vector<double> outside{2.0};
  EXPECT_THROW(jacobian_blocks(boxed, t, outside), ChartError);
}

TEST(ChangeMap, InverseCachedAndComposeAgrees) {
  Rng rng = Rng(testkit::kSeed).stream("numdiff/compose");
  const ChangeMap a = charts::random_nonlinear(rng, 2, 2, "a");
  const ChangeMap b = charts::random_affine(rng, 2, 2, "b");
  EXPECT_EQ(&a.inverse(), &a.inverse());
  const ChangeMap ba = compose(b, a);
  const std::vector<double> t{0.2, 0.5}, x{0.9, 1.1};
  const Eigen::VectorXd direct = b.map_x(as_span(a.map_x(x)));
  EXPECT_LT((ba.map_x(x) - direct).cwiseAbs().maxCoeff(), 1e-12);
  // Chain rule oracle for the composed Jacobian.
  const Eigen::MatrixXd chain = b.dx(as_span(a.map_x(x))) * a.dx(x);
  EXPECT_LT((ba.dx(x) - chain).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((ba.dt(t) - b.dt(as_span(a.map_t(t))) * a.dt(t)).cwiseAbs().maxCoeff(), 1e-12);
}

// Library changes: symbolic Jacobians against central differences of the
// forward expressions, 20 seeded points each.
TEST(ChartLibraryProperty, SymbolicJacobianMatchesFiniteDifference) {
  for (const auto& [p, n] : {std::pair{1, 1}, std::pair{1, 2}, std::pair{2, 2}, std::pair{2, 3}}) {
    const testkit::Setting s = testkit::setting(p, n);
    const auto cs = testkit::changes("numdiff/fd", s, 6);
    const auto us = testkit::jets("numdiff/fd", s, 20);
    for (const ChangeMap& c : cs) {
      for (const JetPoint& u : us) {
        const Eigen::MatrixXd sym = c.dx(as_span(u.x));
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            const double fd = numdiff::fd_partial(
                [&c, i](std::span<const double> z) { return c.map_x(z)(i); }, as_span(u.x), static_cast<std::size_t>(j));
            EXPECT_LE(std::abs(sym(i, j) - fd) / std::max(1.0, std::abs(sym(i, j))), 1e-6) << c.name();
          }
        }
        const Eigen::MatrixXd symt = c.dt(as_span(u.t));
        for (int a = 0; a < p; ++a) {
          for (int b = 0; b < p; ++b) {
            const double fd = numdiff::fd_partial(
                [&c, a](std::span<const double> z) { return c.map_t(z)(a); }, as_span(u.t), static_cast<std::size_t>(b));
            EXPECT_LE(std::abs(symt(a, b) - fd) / std::max(1.0, std::abs(symt(a, b))), 1e-6) << c.name();
          }
        }
      }
    }
  }
}

TEST(ChartLibraryProperty, RoundTripAndJacobianProducts) {
  for (const auto& [p, n] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{2, 3}}) {
    const testkit::Setting s = testkit::setting(p, n);
    const auto us = testkit::jets("numdiff/roundtrip", s, 20);
    std::vector<Eigen::VectorXd> ts, xs;
    for (const JetPoint& u : us) {
      ts.push_back(u.t);
      xs.push_back(u.x);
    }
    for (const ChangeMap& c : testkit::changes("numdiff/roundtrip", s, 8)) {
      const ChangeDiagnostics d = diagnose(c, ts, xs);
      EXPECT_LT(d.roundtrip_error, 1e-9) << c.name();
      EXPECT_LT(d.jacobian_product_error, 1e-9) << c.name();
    }
  }
}

TEST(Charts, NamedCatalog) {
  Rng rng(1);
  const ChangeMap ts = charts::named("time_scale", rng, 1, 1, "ts");
  const std::vector<double> t{0.3};
  EXPECT_DOUBLE_EQ(ts.map_t(t)(0), 0.6);
  EXPECT_THROW(charts::named("bogus", rng, 1, 1, "b"), std::invalid_argument);
}
