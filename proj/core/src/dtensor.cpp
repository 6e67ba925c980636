#include "jetflow/dtensor.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <limits>
#include <stdexcept>

namespace jetflow {

namespace {

bool is_temporal_label(char c) { return c >= 'a' && c <= 'h'; }
bool is_spatial_label(char c) { return c >= 'i' && c <= 'n'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

SlotKind parse_slot(std::string_view slot) {
  auto fail = [&](const char* why) {
    throw std::invalid_argument("bad signature slot '" + std::string(slot) + "': " + why);
  };
  slot = trim(slot);
  if (slot.size() < 3 || (slot[0] != 'U' && slot[0] != 'L') || slot[1] != '(' || slot.back() != ')')
    fail("expected U(...) or L(...)");
  const bool upper = slot[0] == 'U';
  std::string labels;
  for (char ch : slot.substr(2, slot.size() - 3))
    if (!std::isspace(static_cast<unsigned char>(ch))) labels.push_back(ch);
  if (labels.size() == 1) {
    if (is_temporal_label(labels[0])) return upper ? SlotKind::temporal_upper : SlotKind::temporal_lower;
    if (is_spatial_label(labels[0])) return upper ? SlotKind::spatial_upper : SlotKind::spatial_lower;
    fail("label must be in a..h (temporal) or i..n (spatial)");
  }
  if (labels.size() == 3 && labels[1] == ',') {
    if (!is_spatial_label(labels[0]) || !is_temporal_label(labels[2]))
      fail("vertical pair must be (spatial, temporal)");
    return upper ? SlotKind::vertical_upper : SlotKind::vertical_lower;
  }
  fail("expected one label or a label pair");
  return SlotKind::temporal_upper;
}

// out(.., a, ..) = sum_b m(a, b) in(.., b, ..) along `axis`.
NdArray contract_axis(const NdArray& in, std::size_t axis, const Eigen::MatrixXd& m) {
  const auto& shape = in.shape();
  const std::size_t d = shape[axis];
  std::size_t pre = 1;
  std::size_t post = 1;
  for (std::size_t k = 0; k < axis; ++k) pre *= shape[k];
  for (std::size_t k = axis + 1; k < shape.size(); ++k) post *= shape[k];
  NdArray out(shape);
  for (std::size_t q = 0; q < pre; ++q)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) {
        const double w = m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (w == 0.0) continue;
        const std::size_t src = (q * d + b) * post;
        const std::size_t dst = (q * d + a) * post;
        for (std::size_t r = 0; r < post; ++r) out[dst + r] += w * in[src + r];
      }
  return out;
}

Eigen::MatrixXd slot_matrix(SlotKind kind, const JacobianBlocks& jb) {
  const Eigen::MatrixXd& Jt = jb.temporal;
  const Eigen::MatrixXd& A = jb.spatial;
  const Eigen::MatrixXd& B = jb.temporal_inverse;
  const Eigen::MatrixXd& Ai = jb.spatial_inverse;
  const Eigen::Index p = Jt.rows();
  const Eigen::Index n = A.rows();
  switch (kind) {
    case SlotKind::temporal_upper: return Jt;
    case SlotKind::temporal_lower: return B.transpose();
    case SlotKind::spatial_upper: return A;
    case SlotKind::spatial_lower: return Ai.transpose();
    case SlotKind::vertical_upper: {
      Eigen::MatrixXd m(n * p, n * p);
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index mu = 0; mu < p; ++mu)
          for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index b = 0; b < p; ++b) m(r * p + mu, j * p + b) = A(r, j) * B(b, mu);
      return m;
    }
    case SlotKind::vertical_lower: {
      Eigen::MatrixXd m(n * p, n * p);
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index e = 0; e < p; ++e)
          for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index a = 0; a < p; ++a) m(r * p + e, i * p + a) = Ai(i, r) * Jt(e, a);
      return m;
    }
  }
  throw std::logic_error("unknown slot kind");
}

std::vector<CompiledExpr> compile_all(const std::vector<Expr>& es, const std::vector<std::string>& vars) {
  std::vector<CompiledExpr> out;
  out.reserve(es.size());
  for (const Expr& e : es) out.emplace_back(e, vars);
  return out;
}

}  // namespace

IndexSignature IndexSignature::parse(std::string_view text) {
  std::vector<SlotKind> slots;
  if (trim(text).empty()) return IndexSignature{};
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find(';', start);
    slots.push_back(parse_slot(text.substr(start, end == std::string_view::npos ? text.npos : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return IndexSignature(std::move(slots));
}

std::string IndexSignature::to_string() const {
  static constexpr std::string_view temporal = "abcdefgh";
  static constexpr std::string_view spatial = "ijklmn";
  std::size_t nt = 0;
  std::size_t ns = 0;
  auto next_t = [&] { return temporal[nt++ % temporal.size()]; };
  auto next_s = [&] { return spatial[ns++ % spatial.size()]; };
  std::string out;
  for (SlotKind k : slots_) {
    if (!out.empty()) out.push_back(';');
    const bool upper =
        k == SlotKind::temporal_upper || k == SlotKind::spatial_upper || k == SlotKind::vertical_upper;
    out.push_back(upper ? 'U' : 'L');
    out.push_back('(');
    switch (k) {
      case SlotKind::temporal_upper:
      case SlotKind::temporal_lower: out.push_back(next_t()); break;
      case SlotKind::spatial_upper:
      case SlotKind::spatial_lower: out.push_back(next_s()); break;
      case SlotKind::vertical_upper:
      case SlotKind::vertical_lower:
        out.push_back(next_s());
        out.push_back(',');
        out.push_back(next_t());
        break;
    }
    out.push_back(')');
  }
  return out;
}

std::vector<std::size_t> IndexSignature::shape(int p, int n) const {
  std::vector<std::size_t> s;
  for (SlotKind k : slots_) {
    switch (k) {
      case SlotKind::temporal_upper:
      case SlotKind::temporal_lower: s.push_back(static_cast<std::size_t>(p)); break;
      case SlotKind::spatial_upper:
      case SlotKind::spatial_lower: s.push_back(static_cast<std::size_t>(n)); break;
      case SlotKind::vertical_upper:
      case SlotKind::vertical_lower: s.push_back(static_cast<std::size_t>(n * p)); break;
    }
  }
  return s;
}

NdArray DTensorField::operator()(const JetPoint& u) const {
  NdArray out = components(u);
  if (out.shape() != signature.shape(p, n))
    throw std::logic_error("d-tensor field '" + name + "' returned a shape that does not match " +
                           signature.to_string());
  return out;
}

NdArray transform_components(const IndexSignature& sig, const NdArray& components, const JacobianBlocks& blocks) {
  NdArray out = components;
  if (out.rank() == 0) return out;
  for (std::size_t k = 0; k < sig.slots().size(); ++k) out = contract_axis(out, k, slot_matrix(sig.slots()[k], blocks));
  return out;
}

NdArray transform_components(const DTensorField& f, const ChangeMap& c, const JetPoint& u) {
  return transform_components(f.signature, f(u), jacobian_blocks(c, as_span(u.t), as_span(u.x)));
}

Verdict run_law_check(const LawCheck& check, std::span<const ChangeMap> changes, std::span<const JetPoint> points,
                      double tol) {
  Verdict v;
  for (const ChangeMap& c : changes) {
    const auto at = check(c);
    for (const JetPoint& u : points) {
      const auto [pred, native] = at(u);
      double err = max_relative_error(pred, native);
      if (std::isnan(err)) err = std::numeric_limits<double>::infinity();
      ++v.pairs;
      if (!v.witness || err > v.max_rel_err) {
        v.max_rel_err = err;
        v.witness = Witness{c.name(), u};
      }
    }
  }
  v.pass = v.max_rel_err < tol;
  return v;
}

Verdict is_dtensor(const DTensorField& f, std::span<const ChangeMap> changes, std::span<const JetPoint> points,
                   double tol) {
  LawCheck check = [&f](const ChangeMap& c) {
    auto native = std::make_shared<DTensorField>(f.rechart(c));
    return [&f, &c, native](const JetPoint& u) {
      const JacobianBlocks jb = jacobian_blocks(c, as_span(u.t), as_span(u.x));
      NdArray pred = transform_components(f.signature, f(u), jb);
      return std::pair{std::move(pred), (*native)(transform_jet(c, u))};
    };
  };
  return run_law_check(check, changes, points, tol);
}

NdArray liouville_c(const JetPoint& u) {
  const auto n = static_cast<std::size_t>(u.n());
  const auto p = static_cast<std::size_t>(u.p());
  NdArray out({n * p});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a) out(i * p + a) = u.v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
  return out;
}

DTensorField liouville_c_field(int p, int n) {
  DTensorField f;
  f.name = "liouville_C";
  f.p = p;
  f.n = n;
  f.signature = IndexSignature::parse("U(i,a)");
  f.components = liouville_c;
  f.rechart = [p, n](const ChangeMap&) { return liouville_c_field(p, n); };
  return f;
}

NdArray liouville_l(const Metric& h, const JetPoint& u) {
  const Eigen::MatrixXd hv = h.at(as_span(u.t));
  const auto n = static_cast<std::size_t>(u.n());
  const auto p = static_cast<std::size_t>(u.p());
  NdArray out({n * p, p, p});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b)
        for (std::size_t g = 0; g < p; ++g)
          out(i * p + a, b, g) = hv(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(g)) *
                                 u.v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
  return out;
}

DTensorField liouville_l_field(const Metric& h, int n) {
  DTensorField f;
  f.name = "liouville_L";
  f.p = h.dim();
  f.n = n;
  f.signature = IndexSignature::parse("U(i,a);L(b);L(c)");
  f.components = [h](const JetPoint& u) { return liouville_l(h, u); };
  f.rechart = [h, n](const ChangeMap& c) { return liouville_l_field(h.pullback(c), n); };
  return f;
}

NdArray normalization_j(const Metric& h, const JetPoint& u) {
  const Eigen::MatrixXd hv = h.at(as_span(u.t));
  const auto n = static_cast<std::size_t>(u.n());
  const auto p = static_cast<std::size_t>(u.p());
  NdArray out({n * p, p, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b)
        out(i * p + a, b, i) = hv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return out;
}

DTensorField normalization_j_field(const Metric& h, int n) {
  DTensorField f;
  f.name = "normalization_J";
  f.p = h.dim();
  f.n = n;
  f.signature = IndexSignature::parse("U(i,a);L(b);L(j)");
  f.components = [h](const JetPoint& u) { return normalization_j(h, u); };
  f.rechart = [h, n](const ChangeMap& c) { return normalization_j_field(h.pullback(c), n); };
  return f;
}

NdArray lagrangian_metric(const Expr& lagrangian, const JetPoint& u) {
  return lagrangian_metric_field(lagrangian, u.p(), u.n())(u);
}

DTensorField lagrangian_metric_field(const Expr& lagrangian, int p, int n) {
  const int np = n * p;
  const std::vector<std::string> vars = jet_names(p, n);
  // Upper triangle in the fused index, mirrored on evaluation.
  std::vector<Expr> second;
  for (int r = 0; r < np; ++r) {
    const Expr d1 = diff(lagrangian, vars[static_cast<std::size_t>(p + n + r)]);
    for (int s = r; s < np; ++s) second.push_back(diff(d1, vars[static_cast<std::size_t>(p + n + s)]));
  }
  auto compiled = std::make_shared<std::vector<CompiledExpr>>(compile_all(second, vars));

  DTensorField f;
  f.name = "lagrangian_metric";
  f.p = p;
  f.n = n;
  f.signature = IndexSignature::parse("L(i,a);L(j,b)");
  f.components = [compiled, np](const JetPoint& u) {
    const std::vector<double> z = u.flatten();
    const auto m = static_cast<std::size_t>(np);
    NdArray out({m, m});
    std::size_t k = 0;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t s = r; s < m; ++s) {
        const double g = 0.5 * (*compiled)[k++](z);
        out(r, s) = g;
        out(s, r) = g;
      }
    return out;
  };
  f.rechart = [lagrangian, p, n](const ChangeMap& c) {
    return lagrangian_metric_field(substitute(lagrangian, jet_substitution(c)), p, n);
  };
  return f;
}

Expr energy_lagrangian(const Metric& h, const Metric& phi) {
  const auto hi = h.inverse_components();
  const auto& g = phi.components();
  const int p = h.dim();
  const int n = phi.dim();
  Expr out;
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          out = out + hi[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] *
                          g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                          Expr::variable(jet_name(i, a)) * Expr::variable(jet_name(j, b));
  return out;
}

DTensorField expression_field(std::string name, IndexSignature sig, std::vector<Expr> components, int p, int n) {
  const std::vector<std::size_t> shape = sig.shape(p, n);
  std::size_t total = 1;
  for (std::size_t s : shape) total *= s;
  if (components.size() != total)
    throw std::invalid_argument("expression field '" + name + "': expected " + std::to_string(total) +
                                " components for " + sig.to_string());
  auto compiled = std::make_shared<std::vector<CompiledExpr>>(compile_all(components, jet_names(p, n)));

  DTensorField f;
  f.name = std::move(name);
  f.p = p;
  f.n = n;
  f.signature = std::move(sig);
  f.components = [compiled, shape](const JetPoint& u) {
    const std::vector<double> z = u.flatten();
    NdArray out(shape);
    for (std::size_t k = 0; k < compiled->size(); ++k) out[k] = (*compiled)[k](z);
    return out;
  };
  // The candidate is read verbatim in every chart.
  DTensorField self = f;
  f.rechart = [self](const ChangeMap&) {
    DTensorField g = self;
    g.rechart = nullptr;
    return g;
  };
  return f;
}

}  // namespace jetflow
