#pragma once

// Temporal and spatial sprays on the jet bundle, their inhomogeneous
// transformation laws, canonical sprays of metrics and h-traces.

#include <functional>
#include <span>
#include <string>

#include "jetflow/dtensor.hpp"
#include "jetflow/geometry.hpp"
#include "jetflow/jet.hpp"
#include "jetflow/ndarray.hpp"

namespace jetflow {

enum class SprayKind { temporal, spatial };

/// Coefficients H^(j)_(b)a or G^(j)_(b)a as an (n, p, p) array with axes
/// (j, b, a).
struct Spray {
  SprayKind kind = SprayKind::temporal;
  std::string name;
  int p = 0;
  int n = 0;
  std::function<NdArray(const JetPoint&)> eval;
  /// Same spray written natively in the tilde chart.
  std::function<Spray(const ChangeMap&)> rechart;
  /// Optional d S(j, b, a) / d x^k_g with shape (n, p, p, n, p).
  std::function<NdArray(const JetPoint&)> jet_derivative;

  NdArray operator()(const JetPoint& u) const;
};

struct MultiTimeSpray {
  Spray temporal;
  Spray spatial;
};

/// h-trace H^i = h^{ab} H^(i)_(a)b of a spray.
struct HSpray {
  SprayKind kind = SprayKind::temporal;
  std::string name;
  int p = 0;
  int n = 0;
  std::function<Eigen::VectorXd(const JetPoint&)> eval;
  /// d H^i / d x^j_g with shape (n, n, p).
  std::function<NdArray(const JetPoint&)> jet_gradient;
  std::function<HSpray(const ChangeMap&)> rechart;
};

Spray zero_spray(SprayKind kind, int p, int n);

/// 2 H^(j)_(b)a = -H^g_ab x^j_g.
Spray canonical_temporal(const Metric& h, int n);
/// G^(i)_(a)b = 1/2 gamma^i_jk x^j_a x^k_b.
Spray canonical_spatial(const Metric& phi, int p);

/// Predicted tilde coefficients from base coefficients (inhomogeneous laws).
NdArray transform_temporal(const NdArray& H, const JetChange& jc);
NdArray transform_spatial(const NdArray& G, const JetChange& jc);
NdArray transform_spray(const Spray& s, const ChangeMap& c, const JetPoint& u);

/// Recompute-vs-transform check of the spray law over the suite.
Verdict check_spray_law(const Spray& s, std::span<const ChangeMap> changes, std::span<const JetPoint> points,
                        double tol);

/// Spray coefficients posed as a "U(i,a);L(b)" candidate d-tensor.
DTensorField spray_as_dtensor(const Spray& s);

/// l s1 + (1 - l) s2 (same kind).
Spray affine_combination(double l, const Spray& s1, const Spray& s2);

/// s1 - s2 as a "U(i,a);L(b)" field.
DTensorField spray_difference(const Spray& s1, const Spray& s2);

/// Remainder of s after subtracting the canonical spray of its kind
/// (h for temporal, phi for spatial).
DTensorField decompose(const Spray& s, const Metric& h, const Metric& phi);

/// Uses the spray's jet_derivative when present, else central differences.
HSpray h_trace(const Spray& s, const Metric& h);

/// Inverse of the h-trace for one-dimensional T: S^(k)_(1)1 = h_11 S^k.
/// Throws std::invalid_argument for p != 1.
Spray spray_from_hspray(const HSpray& hs, const Metric& h);

}  // namespace jetflow
