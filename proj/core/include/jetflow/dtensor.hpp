#pragma once

// Distinguished tensors on the jet bundle: index signatures, the tensorial
// transformation rule, and a numeric tensoriality check.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jetflow/geometry.hpp"
#include "jetflow/jet.hpp"
#include "jetflow/ndarray.hpp"

namespace jetflow {

enum class SlotKind {
  temporal_upper,
  temporal_lower,
  spatial_upper,
  spatial_lower,
  vertical_upper,  // (i) upper spatial paired with (a) lower temporal, as in x^i_a
  vertical_lower,  // (i) lower spatial paired with (a) upper temporal
};

/// Ordered index slots. Text form: slots separated by ';', each U(...) or
/// L(...) holding one label or a "spatial,temporal" label pair. Labels a..h
/// are temporal and i..n spatial, e.g. "U(i,a);L(b);L(j)".
class IndexSignature {
 public:
  IndexSignature() = default;
  explicit IndexSignature(std::vector<SlotKind> slots) : slots_(std::move(slots)) {}

  /// Throws std::invalid_argument on malformed text.
  static IndexSignature parse(std::string_view text);
  std::string to_string() const;

  const std::vector<SlotKind>& slots() const { return slots_; }
  std::vector<std::size_t> shape(int p, int n) const;

  friend bool operator==(const IndexSignature&, const IndexSignature&) = default;

 private:
  std::vector<SlotKind> slots_;
};

/// Component field with a signature. `rechart` yields the same geometric
/// object expressed natively in the tilde chart of a change; the
/// tensoriality check compares against it.
struct DTensorField {
  std::string name;
  int p = 0;
  int n = 0;
  IndexSignature signature;
  std::function<NdArray(const JetPoint&)> components;
  std::function<DTensorField(const ChangeMap&)> rechart;

  /// Evaluates and checks the shape against the signature.
  NdArray operator()(const JetPoint& u) const;
};

/// Applies the tensor rule slot by slot to already-evaluated components.
NdArray transform_components(const IndexSignature& sig, const NdArray& components, const JacobianBlocks& blocks);

/// Components the field would have in the tilde chart if it is a d-tensor.
NdArray transform_components(const DTensorField& f, const ChangeMap& c, const JetPoint& u);

struct Witness {
  std::string change;
  JetPoint point;
};

/// Outcome of a numeric law check over (change, jet) pairs.
struct Verdict {
  bool pass = true;
  std::size_t pairs = 0;
  double max_rel_err = 0.0;
  std::optional<Witness> witness;  // worst pair
};

/// For a change, returns a per-jet function producing (predicted, native).
using LawCheck =
    std::function<std::function<std::pair<NdArray, NdArray>(const JetPoint&)>(const ChangeMap&)>;

/// Runs `check` over every change and every point; pass iff the worst
/// relative error (denominator max(1, |native|)) is below `tol`.
Verdict run_law_check(const LawCheck& check, std::span<const ChangeMap> changes, std::span<const JetPoint> points,
                      double tol);

Verdict is_dtensor(const DTensorField& f, std::span<const ChangeMap> changes, std::span<const JetPoint> points,
                   double tol);

// Canonical examples.

/// C^(i)_(a) = x^i_a.
NdArray liouville_c(const JetPoint& u);
DTensorField liouville_c_field(int p, int n);

/// L^(i)_(a)bg = h_bg x^i_a.
NdArray liouville_l(const Metric& h, const JetPoint& u);
DTensorField liouville_l_field(const Metric& h, int n);

/// J^(i)_(a)b j = h_ab delta^i_j.
NdArray normalization_j(const Metric& h, const JetPoint& u);
DTensorField normalization_j_field(const Metric& h, int n);

/// G^(a)(b)_(i)(j) = 1/2 d^2 L / dx^i_a dx^j_b, stored with signature
/// "L(i,a);L(j,b)" (shape np x np, fused index i*p + a).
NdArray lagrangian_metric(const Expr& lagrangian, const JetPoint& u);
DTensorField lagrangian_metric_field(const Expr& lagrangian, int p, int n);

/// L = h^{ab}(t) phi_ij(x) x^i_a x^j_b.
Expr energy_lagrangian(const Metric& h, const Metric& phi);

/// Field whose components are the given expressions over jet coordinates,
/// in storage order; reinterpreted verbatim in every chart.
DTensorField expression_field(std::string name, IndexSignature sig, std::vector<Expr> components, int p, int n);

}  // namespace jetflow
