#pragma once

// Nonlinear connections (M, N) on the jet bundle, adapted frames and the
// conversions between connections and multi-time sprays.

#include <functional>
#include <span>
#include <string>

#include "jetflow/dtensor.hpp"
#include "jetflow/geometry.hpp"
#include "jetflow/jet.hpp"
#include "jetflow/spray.hpp"

namespace jetflow {

/// Coefficients at one jet: M with shape (n, p, p) in (j, b, a) and N with
/// shape (n, p, n) in (j, b, i).
struct ConnectionCoefficients {
  NdArray M;
  NdArray N;
};

struct NonlinearConnection {
  std::string name;
  int p = 0;
  int n = 0;
  std::function<ConnectionCoefficients(const JetPoint&)> eval;
  std::function<NonlinearConnection(const ChangeMap&)> rechart;

  ConnectionCoefficients operator()(const JetPoint& u) const;
};

NonlinearConnection zero_connection(int p, int n);

/// M^(j)_(b)a = -H^g_ab x^j_g,  N^(j)_(b)i = gamma^j_ik x^k_b.
NonlinearConnection canonical_connection(const Metric& h, const Metric& phi);

/// Tilde coefficients predicted by the connection law, solved for M~ and N~.
ConnectionCoefficients transform_connection(const ConnectionCoefficients& base, const JetChange& jc);
ConnectionCoefficients transform_connection(const NonlinearConnection& g, const ChangeMap& c, const JetPoint& u);

Verdict check_connection_law(const NonlinearConnection& g, std::span<const ChangeMap> changes,
                             std::span<const JetPoint> points, double tol);

/// Rows are d/dt^a - M d/dx_., d/dx^i - N d/dx_., d/dx^i_a written in the
/// natural frame (coordinate order of jet_names).
Eigen::MatrixXd adapted_frame(const ConnectionCoefficients& k, int p, int n);
Eigen::MatrixXd adapted_frame(const NonlinearConnection& g, const JetPoint& u);

/// Rows are dt^a, dx^i, dx^i_a + M^(i)_(a)b dt^b + N^(i)_(a)j dx^j in the
/// natural coframe.
Eigen::MatrixXd adapted_coframe(const ConnectionCoefficients& k, int p, int n);
Eigen::MatrixXd adapted_coframe(const NonlinearConnection& g, const JetPoint& u);

/// Block matrices of the simple rules: base adapted element r equals
/// sum_s K(r, s) times tilde adapted element s.
Eigen::MatrixXd adapted_frame_rule(const JacobianBlocks& jb);
Eigen::MatrixXd adapted_coframe_rule(const JacobianBlocks& jb);

struct AdaptedVerdicts {
  Verdict frame;
  Verdict coframe;
};

/// Compares each base adapted element, pushed to the tilde natural frame,
/// with the simple-rule combination of tilde adapted elements.
AdaptedVerdicts check_adapted_laws(const NonlinearConnection& g, std::span<const ChangeMap> changes,
                                   std::span<const JetPoint> points, double tol);

/// M = 2H and N^(i)_(a)j = (d G^i / d x^j_g) h_ga with G^i the h-trace of
/// the spatial spray.
NonlinearConnection connection_from_sprays(const MultiTimeSpray& s, const Metric& h);

/// H = M / 2 and G^(i)_(a)b = N^(i)_(a)j x^j_b / 2.
MultiTimeSpray sprays_from_connection(const NonlinearConnection& g);

NdArray to_ndarray(const Eigen::MatrixXd& m);

}  // namespace jetflow
