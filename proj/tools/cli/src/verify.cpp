#include "jetflow_cli/verify.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "jetflow/connection.hpp"
#include "jetflow/prolong.hpp"
#include "jetflow/rng.hpp"
#include "jetflow/sampling.hpp"
#include "jetflow/spray.hpp"

namespace jetflow::cli {

using nlohmann::json;

namespace {

std::vector<JetPoint> suite_jets(const Scenario& s, std::string_view suite) {
  Rng rng = Rng(s.seed).stream(std::string("jets/") + std::string(suite));
  return sample_jets(rng, s.jets, s.t_box, s.x_box, s.v_scale);
}

CheckRecord from_verdict(std::string name, std::string kind, const Verdict& v, bool expect_hold = true) {
  CheckRecord r;
  r.name = std::move(name);
  r.kind = std::move(kind);
  r.expect_hold = expect_hold;
  r.pairs = v.pairs;
  r.max_rel_err = v.max_rel_err;
  r.pass = expect_hold ? v.pass : !v.pass;
  r.witness = v.witness;
  return r;
}

double rel_err(const NdArray& pred, const NdArray& native) {
  double worst = 0.0;
  for (std::size_t k = 0; k < native.size(); ++k) {
    const double e = std::abs(pred[k] - native[k]) / std::max(1.0, std::abs(native[k]));
    worst = std::max(worst, std::isnan(e) ? std::numeric_limits<double>::infinity() : e);
  }
  return worst;
}

/// Pointwise comparison at the suite jets; tol 0 demands bitwise equality.
CheckRecord pointwise(std::string name, const std::vector<JetPoint>& jets,
                      const std::function<std::pair<NdArray, NdArray>(const JetPoint&)>& f, double tol) {
  CheckRecord r;
  r.name = std::move(name);
  r.kind = "roundtrip";
  double worst = -1.0;
  for (const JetPoint& u : jets) {
    const auto [a, b] = f(u);
    const double e = rel_err(a, b);
    ++r.pairs;
    if (e > worst) {
      worst = e;
      r.witness = Witness{"identity", u};
    }
  }
  r.max_rel_err = std::max(worst, 0.0);
  r.pass = tol == 0.0 ? r.max_rel_err == 0.0 : r.max_rel_err < tol;
  return r;
}

bool nonzero_somewhere(const Spray& sp, const std::vector<JetPoint>& jets) {
  for (const JetPoint& u : jets) {
    const NdArray value = sp(u);
    for (double d : value.data())
      if (std::abs(d) > 1e-12) return true;
  }
  return false;
}

std::vector<CheckRecord> suite_dtensors(const Scenario& s) {
  const auto jets = suite_jets(s, "dtensors");
  const double tol = s.tol_symbolic;
  std::vector<CheckRecord> out;
  const std::vector<DTensorField> fields{
      liouville_c_field(s.p, s.n), liouville_l_field(s.h(), s.n), normalization_j_field(s.h(), s.n),
      lagrangian_metric_field(energy_lagrangian(s.h(), s.phi()), s.p, s.n)};
  for (const DTensorField& f : fields) out.push_back(from_verdict(f.name, "tensor", is_dtensor(f, s.changes, jets, tol)));
  for (const Candidate& c : s.candidates) {
    const DTensorField f = expression_field(c.name, c.signature, c.components, s.p, s.n);
    out.push_back(from_verdict("candidate/" + c.name, "tensor", is_dtensor(f, s.changes, jets, tol), c.expect_hold));
  }
  return out;
}

std::vector<CheckRecord> suite_sprays(const Scenario& s) {
  const auto jets = suite_jets(s, "sprays");
  const double tol = s.tol_symbolic;
  const Spray H = canonical_temporal(s.h(), s.n);
  const Spray G = canonical_spatial(s.phi(), s.p);
  std::vector<CheckRecord> out;
  out.push_back(from_verdict("temporal_law", "law", check_spray_law(H, s.changes, jets, tol)));
  out.push_back(from_verdict("spatial_law", "law", check_spray_law(G, s.changes, jets, tol)));
  // Negative controls: nonzero sprays cannot be d-tensors.
  if (nonzero_somewhere(H, jets))
    out.push_back(from_verdict("temporal_not_dtensor", "tensor", is_dtensor(spray_as_dtensor(H), s.changes, jets, tol), false));
  if (nonzero_somewhere(G, jets))
    out.push_back(from_verdict("spatial_not_dtensor", "tensor", is_dtensor(spray_as_dtensor(G), s.changes, jets, tol), false));
  // The midpoint with the flat spray differs from the canonical one by a d-tensor.
  const Spray Hf = canonical_temporal(catalog_metric("euclidean", Factor::temporal, s.p), s.n);
  const Spray Gf = canonical_spatial(catalog_metric("euclidean", Factor::spatial, s.n), s.p);
  out.push_back(from_verdict("temporal_remainder", "tensor",
                             is_dtensor(decompose(affine_combination(0.5, H, Hf), s.h(), s.phi()), s.changes, jets, tol)));
  out.push_back(from_verdict("spatial_remainder", "tensor",
                             is_dtensor(decompose(affine_combination(0.5, G, Gf), s.h(), s.phi()), s.changes, jets, tol)));
  return out;
}

std::vector<CheckRecord> suite_connection(const Scenario& s) {
  const auto jets = suite_jets(s, "connection");
  const double tol = s.tol_symbolic;
  const NonlinearConnection canon = canonical_connection(s.h(), s.phi());
  const MultiTimeSpray sprays{canonical_temporal(s.h(), s.n), canonical_spatial(s.phi(), s.p)};
  const NonlinearConnection from = connection_from_sprays(sprays, s.h());
  const MultiTimeSpray back = sprays_from_connection(from);
  std::vector<CheckRecord> out;
  out.push_back(from_verdict("canonical_law", "law", check_connection_law(canon, s.changes, jets, tol)));
  out.push_back(from_verdict("from_sprays_law", "law", check_connection_law(from, s.changes, jets, tol)));
  out.push_back(pointwise("temporal_roundtrip", jets,
                          [&](const JetPoint& u) { return std::pair{back.temporal(u), sprays.temporal(u)}; }, 0.0));
  out.push_back(pointwise("spatial_roundtrip", jets,
                          [&](const JetPoint& u) { return std::pair{back.spatial(u), sprays.spatial(u)}; }, 1e-10));
  out.push_back(pointwise("from_sprays_matches_canonical", jets,
                          [&](const JetPoint& u) { return std::pair{from(u).N, canon(u).N}; }, tol));
  return out;
}

std::vector<CheckRecord> suite_adapted(const Scenario& s) {
  const auto jets = suite_jets(s, "adapted");
  const AdaptedVerdicts v = check_adapted_laws(canonical_connection(s.h(), s.phi()), s.changes, jets, s.tol_symbolic);
  return {from_verdict("frame_law", "law", v.frame), from_verdict("coframe_law", "law", v.coframe)};
}

std::vector<CheckRecord> suite_prolong(const Scenario& s) {
  const auto jets = suite_jets(s, "prolong");
  const NonlinearConnection canon = canonical_connection(s.h(), s.phi());
  std::vector<CheckRecord> out;
  for (const NamedField& f : s.fields) {
    out.push_back(from_verdict("gap_dtensor/" + f.name, "tensor",
                               is_dtensor(vertical_gap_field(f.field, canon), s.changes, jets, s.tol_symbolic)));
    CheckRecord r;
    r.name = "flow_order/" + f.name;
    r.kind = "ratio";
    r.pass = true;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const JetPoint& u : jets) {
      const double coarse = flow_prolong_check(f.field, u, 2e-2);
      const double fine = flow_prolong_check(f.field, u, 1e-2);
      ++r.pairs;
      bool ok;
      if (coarse < 1e-9) {
        // Exact flows leave only rounding; no order to measure.
        ok = fine < 1e-8;
      } else {
        const double ratio = coarse / fine;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        ok = ratio >= 3.5 && ratio <= 4.5;
        r.max_rel_err = std::max(r.max_rel_err, std::abs(ratio - 4.0) / 4.0);
      }
      if (!ok && r.pass) r.witness = Witness{"flow", u};
      r.pass = r.pass && ok;
    }
    if (hi >= lo) r.extra = json{{"min_ratio", lo}, {"max_ratio", hi}};
    out.push_back(std::move(r));
  }
  return out;
}

using SuiteFn = std::vector<CheckRecord> (*)(const Scenario&);

SuiteFn lookup(std::string_view name) {
  if (name == "adapted") return suite_adapted;
  if (name == "connection") return suite_connection;
  if (name == "dtensors") return suite_dtensors;
  if (name == "prolong") return suite_prolong;
  if (name == "sprays") return suite_sprays;
  return nullptr;
}

}  // namespace

bool SuiteReport::pass() const {
  for (const CheckRecord& c : checks)
    if (!c.pass) return false;
  return true;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"adapted", "connection", "dtensors", "prolong", "sprays"};
  return names;
}

SuiteReport run_suite(const Scenario& s, std::string_view suite) {
  SuiteReport r;
  r.suite = std::string(suite);
  if (suite == "all") {
    for (const std::string& name : suite_names())
      for (CheckRecord& c : lookup(name)(s)) {
        c.name = name + "/" + c.name;
        r.checks.push_back(std::move(c));
      }
    return r;
  }
  const SuiteFn fn = lookup(suite);
  if (fn == nullptr) throw std::invalid_argument("unknown suite '" + std::string(suite) + "'");
  r.checks = fn(s);
  return r;
}

json report_json(const Scenario& s, const SuiteReport& r) {
  json checks = json::array();
  for (const CheckRecord& c : r.checks) {
    json j{{"name", c.name},
           {"kind", c.kind},
           {"expect", c.expect_hold ? "hold" : "break"},
           {"pairs", c.pairs},
           {"pass", c.pass}};
    j["max_rel_err"] = std::isfinite(c.max_rel_err) ? json(c.max_rel_err) : json(nullptr);
    if (c.witness) j["witness"] = json{{"change", c.witness->change}, {"jet", jet_to_json(c.witness->point)}};
    for (auto it = c.extra.begin(); it != c.extra.end(); ++it) j[it.key()] = it.value();
    checks.push_back(std::move(j));
  }
  return json{{"scenario", s.name}, {"seed", s.seed}, {"suite", r.suite}, {"checks", checks}, {"pass", r.pass()}};
}

}  // namespace jetflow::cli
