#include "jetflow_cli/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "jetflow/charts.hpp"
#include "jetflow/rng.hpp"
#include "jetflow/sampling.hpp"

namespace jetflow::cli {

using nlohmann::json;

namespace {

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string child(const std::string& ptr, std::size_t k) { return ptr + "/" + std::to_string(k); }

const json& require(const json& obj, const std::string& key, const std::string& ptr) {
  if (!obj.is_object()) throw ScenarioError(ptr, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ScenarioError(child(ptr, key), "missing required member");
  return *it;
}

int as_int(const json& j, const std::string& ptr, int lo, int hi) {
  if (!j.is_number_integer()) throw ScenarioError(ptr, "expected an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > hi)
    throw ScenarioError(ptr, "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

double as_double(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw ScenarioError(ptr, "expected a number");
  return j.get<double>();
}

double as_positive(const json& j, const std::string& ptr) {
  const double v = as_double(j, ptr);
  if (!(v > 0.0)) throw ScenarioError(ptr, "expected a positive number");
  return v;
}

std::string as_string(const json& j, const std::string& ptr) {
  if (!j.is_string()) throw ScenarioError(ptr, "expected a string");
  return j.get<std::string>();
}

Expr as_expr(const json& j, const std::string& ptr) {
  const std::string src = as_string(j, ptr);
  try {
    return parse(src);
  } catch (const ParseError& e) {
    throw ScenarioError(ptr, std::string("bad expression: ") + e.what());
  }
}

std::vector<Expr> as_exprs(const json& j, const std::string& ptr, std::size_t count) {
  if (!j.is_array()) throw ScenarioError(ptr, "expected an array of expressions");
  if (j.size() != count) throw ScenarioError(ptr, "expected " + std::to_string(count) + " expressions");
  std::vector<Expr> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(as_expr(j[k], child(ptr, k)));
  return out;
}

void check_variables(const std::vector<Expr>& es, const std::vector<std::string>& allowed, const std::string& ptr) {
  for (std::size_t k = 0; k < es.size(); ++k)
    for (const std::string& v : variables_of(es[k]))
      if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
        throw ScenarioError(child(ptr, k), "unknown variable '" + v + "'");
}

Interval as_interval(const json& j, const std::string& ptr) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError(ptr, "expected [lo, hi]");
  const Interval iv{as_double(j[0], child(ptr, 0)), as_double(j[1], child(ptr, 1))};
  if (!(iv.lo < iv.hi)) throw ScenarioError(ptr, "expected lo < hi");
  return iv;
}

/// Either one [lo, hi] pair for every coordinate or a list of pairs.
Box as_box(const json& j, int dim, const std::string& ptr) {
  if (j.is_array() && j.size() == 2 && j[0].is_number()) {
    const Interval iv = as_interval(j, ptr);
    return Box(static_cast<std::size_t>(dim), iv);
  }
  if (!j.is_array() || j.size() != static_cast<std::size_t>(dim))
    throw ScenarioError(ptr, "expected [lo, hi] or " + std::to_string(dim) + " intervals");
  Box b;
  for (std::size_t k = 0; k < j.size(); ++k) b.push_back(as_interval(j[k], child(ptr, k)));
  return b;
}

std::vector<std::string> factor_names(Factor f, int dim) {
  std::vector<std::string> out;
  for (int k = 0; k < dim; ++k) out.push_back((f == Factor::temporal ? "t" : "x") + std::to_string(k + 1));
  return out;
}

Metric parse_metric(const json& j, Factor factor, int dim, const std::string& ptr) {
  try {
    if (j.is_string()) return catalog_metric(j.get<std::string>(), factor, dim);
    if (!j.is_object()) throw ScenarioError(ptr, "expected a catalog name or an object");
    if (j.contains("name")) {
      const std::string name = as_string(j["name"], child(ptr, "name"));
      Expr lambda;
      if (j.contains("lambda")) lambda = as_expr(j["lambda"], child(ptr, "lambda"));
      return catalog_metric(name, factor, dim, lambda);
    }
    const json& rows = require(j, "components", ptr);
    const std::string rp = child(ptr, "components");
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(dim))
      throw ScenarioError(rp, "expected " + std::to_string(dim) + " rows");
    std::vector<std::vector<Expr>> comps;
    const auto names = factor_names(factor, dim);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      comps.push_back(as_exprs(rows[r], child(rp, r), static_cast<std::size_t>(dim)));
      check_variables(comps.back(), names, child(rp, r));
    }
    Box domain;
    if (j.contains("domain")) domain = as_box(j["domain"], dim, child(ptr, "domain"));
    return Metric(factor, std::move(comps), std::move(domain), j.value("label", std::string("custom")));
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(ptr, e.what());
  }
}

ChangeMap parse_change(const json& j, Rng& rng, int p, int n, const Box& tb, const Box& xb, const std::string& ptr,
                       std::size_t index) {
  const std::string fallback = "change_" + std::to_string(index);
  try {
    if (j.is_string()) return charts::named(j.get<std::string>(), rng, p, n, j.get<std::string>() + "_" + std::to_string(index), tb, xb);
    if (!j.is_object()) throw ScenarioError(ptr, "expected a catalog keyword or an object");
    const std::string name = j.contains("name") ? as_string(j["name"], child(ptr, "name")) : fallback;
    if (j.contains("kind"))
      return charts::named(as_string(j["kind"], child(ptr, "kind")), rng, p, n, name, tb, xb);
    const auto tn = factor_names(Factor::temporal, p), xn = factor_names(Factor::spatial, n);
    auto ft = as_exprs(require(j, "forward_t", ptr), child(ptr, "forward_t"), static_cast<std::size_t>(p));
    auto fx = as_exprs(require(j, "forward_x", ptr), child(ptr, "forward_x"), static_cast<std::size_t>(n));
    auto it = as_exprs(require(j, "inverse_t", ptr), child(ptr, "inverse_t"), static_cast<std::size_t>(p));
    auto ix = as_exprs(require(j, "inverse_x", ptr), child(ptr, "inverse_x"), static_cast<std::size_t>(n));
    check_variables(ft, tn, child(ptr, "forward_t"));
    check_variables(it, tn, child(ptr, "inverse_t"));
    check_variables(fx, xn, child(ptr, "forward_x"));
    check_variables(ix, xn, child(ptr, "inverse_x"));
    Box dt = tb, dx = xb;
    if (j.contains("domain_t")) dt = as_box(j["domain_t"], p, child(ptr, "domain_t"));
    if (j.contains("domain_x")) dx = as_box(j["domain_x"], n, child(ptr, "domain_x"));
    return ChangeMap(name, std::move(ft), std::move(fx), std::move(it), std::move(ix), std::move(dt), std::move(dx));
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(ptr, e.what());
  }
}

std::vector<NamedField> default_fields(int p, int n) {
  auto zeros = [](int k) { return std::vector<Expr>(static_cast<std::size_t>(k), Expr::number(0.0)); };
  std::vector<NamedField> out;
  {
    auto x = zeros(n);
    x[0] = parse("x1");
    out.push_back({"spatial_scaling", BaseVectorField(p, n, zeros(p), x)});
  }
  {
    auto t = zeros(p);
    t[0] = parse("t1 + 0.5*x1");
    out.push_back({"temporal_scaling", BaseVectorField(p, n, t, zeros(n))});
  }
  {
    std::vector<Expr> t, x;
    for (int a = 0; a < p; ++a) t.push_back(parse(a == 0 ? "1 + 0.2*sin(x1)" : "0.1*t" + std::to_string(a + 1) + "*x1"));
    for (int i = 0; i < n; ++i) {
      const std::string xi = "x" + std::to_string(i + 1), xj = "x" + std::to_string((i + 1) % n + 1);
      x.push_back(parse("0.3*" + xi + "^2 - 0.2*t1*" + xj + " + 0.1*cos(t1 + " + xi + ")"));
    }
    out.push_back({"nonlinear", BaseVectorField(p, n, t, x)});
  }
  return out;
}

}  // namespace

std::optional<std::uint64_t> seed_from_environment() {
  const char* raw = std::getenv("JETFLOW_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0') throw ScenarioError("$JETFLOW_SEED", std::string("not an integer: '") + raw + "'");
  return static_cast<std::uint64_t>(v);
}

JetPoint parse_jet(const json& j, int p, int n, const std::string& ptr) {
  if (!j.is_object()) throw ScenarioError(ptr, "expected {\"t\", \"x\", \"v\"}");
  JetPoint u;
  u.t.resize(p);
  u.x.resize(n);
  u.v.resize(n, p);
  const json& t = require(j, "t", ptr);
  const json& x = require(j, "x", ptr);
  const json& v = require(j, "v", ptr);
  if (!t.is_array() || t.size() != static_cast<std::size_t>(p)) throw ScenarioError(child(ptr, "t"), "expected " + std::to_string(p) + " numbers");
  if (!x.is_array() || x.size() != static_cast<std::size_t>(n)) throw ScenarioError(child(ptr, "x"), "expected " + std::to_string(n) + " numbers");
  if (!v.is_array() || v.size() != static_cast<std::size_t>(n)) throw ScenarioError(child(ptr, "v"), "expected " + std::to_string(n) + " rows");
  for (int a = 0; a < p; ++a) u.t(a) = as_double(t[static_cast<std::size_t>(a)], child(child(ptr, "t"), static_cast<std::size_t>(a)));
  for (int i = 0; i < n; ++i) {
    const std::string rp = child(child(ptr, "v"), static_cast<std::size_t>(i));
    u.x(i) = as_double(x[static_cast<std::size_t>(i)], child(child(ptr, "x"), static_cast<std::size_t>(i)));
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(p)) throw ScenarioError(rp, "expected " + std::to_string(p) + " numbers");
    for (int a = 0; a < p; ++a) u.v(i, a) = as_double(row[static_cast<std::size_t>(a)], child(rp, static_cast<std::size_t>(a)));
  }
  return u;
}

json jet_to_json(const JetPoint& u) {
  json v = json::array();
  for (int i = 0; i < u.n(); ++i) {
    json row = json::array();
    for (int a = 0; a < u.p(); ++a) row.push_back(u.v(i, a));
    v.push_back(row);
  }
  return json{{"t", std::vector<double>(u.t.data(), u.t.data() + u.t.size())},
              {"x", std::vector<double>(u.x.data(), u.x.data() + u.x.size())},
              {"v", v}};
}

Scenario load_scenario(const json& doc, std::optional<std::uint64_t> seed_override) {
  if (!doc.is_object()) throw ScenarioError("", "scenario must be a JSON object");
  Scenario s;
  s.name = doc.contains("name") ? as_string(doc["name"], "/name") : std::string("scenario");
  if (seed_override) {
    s.seed = *seed_override;
  } else if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) throw ScenarioError("/seed", "expected an integer");
    s.seed = doc["seed"].get<std::uint64_t>();
  } else {
    s.seed = 1;
  }

  const json& tj = require(doc, "temporal", "");
  const json& sj = require(doc, "spatial", "");
  s.p = as_int(require(tj, "dim", "/temporal"), "/temporal/dim", 1, 3);
  s.n = as_int(require(sj, "dim", "/spatial"), "/spatial/dim", 1, 3);
  s.temporal = parse_metric(require(tj, "metric", "/temporal"), Factor::temporal, s.p, "/temporal/metric");
  s.spatial = parse_metric(require(sj, "metric", "/spatial"), Factor::spatial, s.n, "/spatial/metric");

  s.t_box = uniform_box(s.p, -0.5, 0.8);
  s.x_box = uniform_box(s.n, 0.4, 1.4);
  if (doc.contains("sampling")) {
    const json& sm = doc["sampling"];
    if (!sm.is_object()) throw ScenarioError("/sampling", "expected an object");
    if (sm.contains("t")) s.t_box = as_box(sm["t"], s.p, "/sampling/t");
    if (sm.contains("x")) s.x_box = as_box(sm["x"], s.n, "/sampling/x");
    if (sm.contains("v_scale")) s.v_scale = as_positive(sm["v_scale"], "/sampling/v_scale");
  }
  // Corners of the sampling box must lie in the metric domains.
  {
    std::vector<double> tl, th, xl, xh;
    for (const Interval& iv : s.t_box) tl.push_back(iv.lo), th.push_back(iv.hi);
    for (const Interval& iv : s.x_box) xl.push_back(iv.lo), xh.push_back(iv.hi);
    if (!s.h().contains(tl) || !s.h().contains(th)) throw ScenarioError("/sampling/t", "box leaves the temporal metric's domain");
    if (!s.phi().contains(xl) || !s.phi().contains(xh)) throw ScenarioError("/sampling/x", "box leaves the spatial metric's domain");
  }

  int change_count = 10;
  if (doc.contains("tolerances")) {
    const json& tol = doc["tolerances"];
    if (!tol.is_object()) throw ScenarioError("/tolerances", "expected an object");
    if (tol.contains("symbolic")) s.tol_symbolic = as_positive(tol["symbolic"], "/tolerances/symbolic");
    if (tol.contains("fd")) s.tol_fd = as_positive(tol["fd"], "/tolerances/fd");
  }
  if (doc.contains("suite")) {
    const json& su = doc["suite"];
    if (!su.is_object()) throw ScenarioError("/suite", "expected an object");
    if (su.contains("changes")) change_count = as_int(su["changes"], "/suite/changes", 1, 1000);
    if (su.contains("jets")) s.jets = as_int(su["jets"], "/suite/jets", 1, 1000);
  }

  const Rng root(s.seed);
  Rng change_rng = root.stream("changes");
  if (doc.contains("changes")) {
    const json& cs = doc["changes"];
    if (!cs.is_array() || cs.empty()) throw ScenarioError("/changes", "expected a non-empty array");
    for (std::size_t k = 0; k < cs.size(); ++k)
      s.changes.push_back(parse_change(cs[k], change_rng, s.p, s.n, s.t_box, s.x_box, child("/changes", k), k));
  } else {
    s.changes = charts::suite(change_rng, s.p, s.n, change_count, s.t_box, s.x_box, "change");
  }

  if (doc.contains("candidates")) {
    const json& cj = doc["candidates"];
    if (!cj.is_array()) throw ScenarioError("/candidates", "expected an array");
    const auto names = jet_names(s.p, s.n);
    for (std::size_t k = 0; k < cj.size(); ++k) {
      const std::string ptr = child("/candidates", k);
      Candidate c;
      c.name = as_string(require(cj[k], "name", ptr), child(ptr, "name"));
      try {
        c.signature = IndexSignature::parse(as_string(require(cj[k], "signature", ptr), child(ptr, "signature")));
      } catch (const std::invalid_argument& e) {
        throw ScenarioError(child(ptr, "signature"), e.what());
      }
      std::size_t total = 1;
      for (std::size_t e : c.signature.shape(s.p, s.n)) total *= e;
      c.components = as_exprs(require(cj[k], "components", ptr), child(ptr, "components"), total);
      check_variables(c.components, names, child(ptr, "components"));
      if (cj[k].contains("expect")) {
        const std::string e = as_string(cj[k]["expect"], child(ptr, "expect"));
        if (e != "hold" && e != "break") throw ScenarioError(child(ptr, "expect"), "expected \"hold\" or \"break\"");
        c.expect_hold = e == "hold";
      }
      s.candidates.push_back(std::move(c));
    }
  }

  if (doc.contains("fields")) {
    const json& fj = doc["fields"];
    if (!fj.is_array()) throw ScenarioError("/fields", "expected an array");
    for (std::size_t k = 0; k < fj.size(); ++k) {
      const std::string ptr = child("/fields", k);
      const std::string name = fj[k].contains("name") ? as_string(fj[k]["name"], child(ptr, "name")) : "field_" + std::to_string(k);
      auto t = as_exprs(require(fj[k], "t", ptr), child(ptr, "t"), static_cast<std::size_t>(s.p));
      auto x = as_exprs(require(fj[k], "x", ptr), child(ptr, "x"), static_cast<std::size_t>(s.n));
      try {
        s.fields.push_back({name, BaseVectorField(s.p, s.n, t, x)});
      } catch (const std::invalid_argument& e) {
        throw ScenarioError(ptr, e.what());
      }
    }
  } else {
    s.fields = default_fields(s.p, s.n);
  }

  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    if (!g.is_object()) throw ScenarioError("/grid", "expected an object");
    if (g.contains("t1")) {
      const Interval iv = as_interval(g["t1"], "/grid/t1");
      s.grid.t1_lo = iv.lo;
      s.grid.t1_hi = iv.hi;
    }
    if (g.contains("t2")) {
      const Interval iv = as_interval(g["t2"], "/grid/t2");
      s.grid.t2_lo = iv.lo;
      s.grid.t2_hi = iv.hi;
    }
  }
  return s;
}

Scenario load_scenario_file(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", "cannot open scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("", std::string("invalid JSON: ") + e.what());
  }
  return load_scenario(doc, seed_override);
}

}  // namespace jetflow::cli
