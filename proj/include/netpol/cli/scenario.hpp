#pragma once

// Scenario files: a single JSON object. Unknown keys anywhere are errors.
//
//   graph:         {"type": "biclique", "u", "v"} | {"type": "edge_list", "path", "n"?}
//                  | {"type": "edges", "n", "edges": [[1,2], ...]}; optional "copies"
//   model:         {"family": ..., parameters}; see parse_model
//   models:        [{"name", "model"}] (decide)
//   exposure:      {"family": "own_treatment" | "neighbor_count_capped" | "own_and_any_neighbor",
//                   "cap"?, "tolerance"?}
//   policy:        {"family": ..., parameters}; policies: [policy, ...]
//   neighborhoods: {"type": "graph"} | {"type": "unique_pairs", "targets": [...]}
//   estimands:     [{"name": ..., ...}]
//   engine:        {"mode": "exact" | "mc", "n_samples", "seed", "cap", "threads"}
//   output:        {"dir"}
//   equiv:         {"copies", "random_tables", "table_seed"}
//   biclique:      {"u", "v", "y_left", "y_right", "grid", "step", "margin", "p_values", "copies"}
//
// Unit labels in files are 1-based.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "netpol/netpol.hpp"

namespace netpol::cli {

using Json = nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so that leftovers
// can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  const std::string& path() const noexcept { return path_; }
  bool has(const std::string& key) const { return j_.contains(key); }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ValidationError("field '" + field(key) + "': " + msg);
  }

  std::string field(const std::string& key) const {
    if (key.empty()) return path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const Json& raw(const std::string& key) {
    if (!has(key)) fail(key, "missing required field");
    used_.insert(key);
    return j_.at(key);
  }

  std::optional<std::reference_wrapper<const Json>> optional_raw(const std::string& key) {
    if (!has(key)) return std::nullopt;
    used_.insert(key);
    return std::cref(j_.at(key));
  }

  double number(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::size_t count(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v.get<std::size_t>();
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? count(key) : fallback;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> numbers(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail(key, "expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_array()) fail(key, "expected an array of non-negative integers");
    std::vector<std::size_t> out;
    for (const auto& x : v) {
      if (!x.is_number_unsigned()) fail(key, "expected an array of non-negative integers");
      out.push_back(x.get<std::size_t>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(it.key(), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

struct NamedModel {
  std::string name;
  OutcomeModel model;
};

struct FocalSpec {
  std::string variant;
  std::size_t level = 0;
};

struct EstimandRequest {
  std::string name;
  std::string label;
  FocalSpec focal;
  FocalSpec focal2;
  std::size_t level = 0;
  std::size_t m = 0;
  std::vector<std::pair<FocalSpec, double>> components;
};

struct EquivSettings {
  std::vector<std::size_t> copies{1, 2, 4, 8};
  std::size_t random_tables = 0;
  std::uint64_t table_seed = 1;
};

struct BicliqueSettings {
  std::size_t u = 2;
  std::size_t v = 3;
  std::optional<std::vector<double>> y_left;
  std::optional<std::vector<double>> y_right;
  std::size_t grid = 100;
  double step = 0.005;
  double margin = 0.05;
  std::vector<double> p_values{0.3, 0.5, 0.7};
  std::vector<std::size_t> copies{1, 2, 4, 8, 16, 32};
};

struct Scenario {
  std::filesystem::path base_dir = ".";
  std::optional<Graph> graph;
  std::optional<Graph> component;  // graph before "copies" was applied
  std::size_t graph_copies = 1;
  std::optional<OutcomeModel> model;
  std::vector<NamedModel> models;
  std::optional<ExposureMap> exposure;
  double exposure_tolerance = 0.0;
  std::vector<Policy> policies;
  std::optional<NeighborhoodStructure> neighborhoods;
  std::vector<EstimandRequest> estimands;
  EngineOptions engine;
  std::string out_dir = ".";
  EquivSettings equiv;
  std::optional<BicliqueSettings> biclique;
};

namespace detail {

inline std::vector<double> per_unit_values(ObjectReader& r, const std::string& key,
                                           const Graph& g, double fallback) {
  const std::string by_degree = key + "_by_degree";
  const std::string by_label = key + "_by_label";
  const int given = int(r.has(key)) + int(r.has(by_degree)) + int(r.has(by_label));
  if (given > 1) r.fail(key, "give exactly one of " + key + ", " + by_degree + ", " + by_label);
  if (r.has(key)) {
    if (r.raw(key).is_number()) return std::vector<double>(g.n(), r.number(key));
    auto v = r.numbers(key);
    if (v.size() != g.n()) {
      r.fail(key, "expected " + std::to_string(g.n()) + " entries, got " + std::to_string(v.size()));
    }
    return v;
  }
  if (!r.has(by_degree) && !r.has(by_label)) return std::vector<double>(g.n(), fallback);
  // Units not covered by a degree or label rule get 0.
  std::vector<double> out(g.n(), 0.0);
  if (r.has(by_degree)) {
    const Json& m = r.raw(by_degree);
    if (!m.is_object()) r.fail(by_degree, "expected an object mapping degree to value");
    for (auto it = m.begin(); it != m.end(); ++it) {
      std::size_t deg = 0;
      try {
        std::size_t used = 0;
        deg = std::stoul(it.key(), &used);
        if (used != it.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        r.fail(by_degree, "key '" + it.key() + "' is not a degree");
      }
      if (!it.value().is_number()) r.fail(by_degree, "values must be numbers");
      bool any = false;
      for (Unit i = 0; i < g.n(); ++i) {
        if (g.degree(i) == deg) {
          out[i] = it.value().get<double>();
          any = true;
        }
      }
      if (!any) r.fail(by_degree, "no unit has degree " + it.key());
    }
    return out;
  }
  if (r.has(by_label)) {
    const Json& m = r.raw(by_label);
    if (!m.is_object()) r.fail(by_label, "expected an object mapping label to value");
    if (!g.has_labels()) r.fail(by_label, "the graph has no unit labels");
    for (auto it = m.begin(); it != m.end(); ++it) {
      if (!it.value().is_number()) r.fail(by_label, "values must be numbers");
      bool any = false;
      for (Unit i = 0; i < g.n(); ++i) {
        if (g.label(i) == it.key()) {
          out[i] = it.value().get<double>();
          any = true;
        }
      }
      if (!any) r.fail(by_label, "no unit has label '" + it.key() + "'");
    }
  }
  return out;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

inline Graph parse_graph(const Json& j, const std::filesystem::path& base, std::size_t* copies_out,
                         std::optional<Graph>* component_out) {
  ObjectReader r(j, "graph");
  const std::string type = r.string("type");
  Graph g;
  if (type == "biclique") {
    g = biclique(r.count("u"), r.count("v"));
  } else if (type == "edge_list") {
    const auto path = detail::resolve(base, r.string("path"));
    std::ifstream in(path);
    if (!in) r.fail("path", "cannot open " + path.string());
    std::optional<std::size_t> n;
    if (r.has("n")) n = r.count("n");
    g = read_edge_list(in, n);
  } else if (type == "edges") {
    const std::size_t n = r.count("n");
    const Json& e = r.raw("edges");
    if (!e.is_array()) r.fail("edges", "expected an array of [u, v] pairs");
    std::vector<std::pair<Unit, Unit>> edges;
    for (const auto& pair : e) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() ||
          !pair[1].is_number_unsigned() || pair[0].get<std::size_t>() == 0 ||
          pair[1].get<std::size_t>() == 0) {
        r.fail("edges", "each edge must be a pair of 1-based unit labels");
      }
      edges.emplace_back(pair[0].get<std::size_t>() - 1, pair[1].get<std::size_t>() - 1);
    }
    g = Graph(n, edges);
  } else {
    r.fail("type", "unknown graph type '" + type + "' (biclique, edge_list, edges)");
  }
  const std::size_t copies = r.count("copies", 1);
  if (copies == 0) r.fail("copies", "must be >= 1");
  r.finish();
  if (copies_out) *copies_out = copies;
  if (component_out) *component_out = g;
  return copies == 1 ? g : disjoint_copies(g, copies);
}

inline OutcomeModel parse_model(const Json& j, const Graph& g, const std::filesystem::path& base,
                                const std::string& path = "model") {
  ObjectReader r(j, path);
  const std::string family = r.string("family");
  OutcomeModel m;
  if (family == "own_treatment") {
    m = OutcomeModel::own_treatment(r.number("alpha", 0.0), r.number("tau", 1.0));
  } else if (family == "treated_neighbor_count") {
    m = OutcomeModel::treated_neighbor_count();
  } else if (family == "one_treated_neighbor_indicator") {
    m = OutcomeModel::one_treated_neighbor_indicator(detail::per_unit_values(r, "c", g, 1.0));
  } else if (family == "constant_baseline") {
    if (!r.has("b") && !r.has("b_by_degree") && !r.has("b_by_label")) {
      r.fail("b", "missing required field");
    }
    m = OutcomeModel::constant_baseline(detail::per_unit_values(r, "b", g, 0.0));
  } else if (family == "exposure_response") {
    const std::size_t cap = r.count("cap");
    std::vector<std::vector<double>> rows(g.n());
    if (r.has("values_by_label")) {
      const Json& m2 = r.raw("values_by_label");
      if (!m2.is_object() || !g.has_labels()) {
        r.fail("values_by_label", "needs an object and a labeled graph");
      }
      for (Unit i = 0; i < g.n(); ++i) {
        if (!m2.contains(g.label(i))) r.fail("values_by_label", "no entry for label '" + g.label(i) + "'");
        rows[i] = m2.at(g.label(i)).get<std::vector<double>>();
      }
    } else {
      const Json& v = r.raw("values");
      if (!v.is_array() || v.size() != g.n()) r.fail("values", "expected one array per unit");
      for (Unit i = 0; i < g.n(); ++i) rows[i] = v[i].get<std::vector<double>>();
    }
    for (const auto& row : rows) {
      if (row.size() != cap + 1) r.fail("cap", "every outcome row needs cap+1 entries");
    }
    m = OutcomeModel::exposure_response(cap, std::move(rows));
  } else if (family == "explicit_table") {
    const auto p = detail::resolve(base, r.string("path"));
    std::ifstream in(p);
    if (!in) r.fail("path", "cannot open " + p.string());
    const ScienceTable t = read_table_csv(in);
    if (t.n() != g.n()) {
      r.fail("path", "table has " + std::to_string(t.n()) + " units, graph has " +
                         std::to_string(g.n()));
    }
    std::vector<double> values(t.n() * assignment_count(t.n()));
    for (Assignment z = 0; z < assignment_count(t.n()); ++z) {
      for (Unit i = 0; i < t.n(); ++i) values[z * t.n() + i] = t.at(i, z);
    }
    m = OutcomeModel::explicit_table(t.n(), std::move(values));
  } else if (family == "linear_combination") {
    const Json& terms = r.raw("terms");
    if (!terms.is_array() || terms.empty()) r.fail("terms", "expected a nonempty array");
    std::vector<std::pair<double, OutcomeModel>> parts;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      ObjectReader t(terms[k], r.field("terms") + "[" + std::to_string(k) + "]");
      const double w = t.number("weight", 1.0);
      parts.emplace_back(w, parse_model(t.raw("model"), g, base, t.field("model")));
      t.finish();
    }
    m = OutcomeModel::linear_combination(parts);
  } else {
    r.fail("family",
           "unknown model family '" + family +
               "' (own_treatment, treated_neighbor_count, one_treated_neighbor_indicator, "
               "constant_baseline, exposure_response, explicit_table, linear_combination)");
  }
  r.finish();
  try {
    m.validate(g);
  } catch (const ValidationError& e) {
    r.fail("", e.what());
  }
  return m;
}

inline ExposureMap parse_exposure(const Json& j, double* tolerance) {
  ObjectReader r(j, "exposure");
  const std::string family = r.string("family");
  std::optional<ExposureMap> map;
  if (family == "own_treatment") {
    map = ExposureMap::own_treatment();
  } else if (family == "neighbor_count_capped") {
    const std::size_t cap = r.count("cap", 2);
    if (cap == 0) r.fail("cap", "must be >= 1");
    map = ExposureMap::neighbor_count_capped(cap);
  } else if (family == "own_and_any_neighbor") {
    map = ExposureMap::own_and_any_neighbor();
  } else {
    r.fail("family", "unknown exposure family '" + family +
                         "' (own_treatment, neighbor_count_capped, own_and_any_neighbor)");
  }
  const double tol = r.number("tolerance", 0.0);
  if (!(tol >= 0.0)) r.fail("tolerance", "must be >= 0");
  if (tolerance) *tolerance = tol;
  r.finish();
  return *map;
}

// Returns one policy, or several when a *_grid key is used.
inline std::vector<Policy> parse_policy(const Json& j, const Graph& g, const std::string& path) {
  ObjectReader r(j, path);
  const std::string family = r.string("family");
  const std::size_t n = g.n();
  std::vector<Policy> out;
  auto guard = [&](const std::string& key, auto&& make) {
    try {
      out.push_back(make());
    } catch (const ValidationError& e) {
      r.fail(key, e.what());
    }
  };
  if (family == "homogeneous_bernoulli") {
    if (r.has("p_grid")) {
      for (double p : r.numbers("p_grid")) {
        guard("p_grid", [&] { return Policy::homogeneous_bernoulli(n, p); });
      }
    } else {
      const double p = r.number("p");
      guard("p", [&] { return Policy::homogeneous_bernoulli(n, p); });
    }
  } else if (family == "heterogeneous_bernoulli") {
    if (!r.has("p") && !r.has("p_by_degree") && !r.has("p_by_label")) {
      r.fail("p", "missing required field (or p_by_degree / p_by_label)");
    }
    auto p = detail::per_unit_values(r, "p", g, 0.0);
    guard("p", [&] { return Policy::heterogeneous_bernoulli(p); });
  } else if (family == "completely_randomized") {
    if (r.has("m_grid")) {
      for (std::size_t m : r.counts("m_grid")) {
        guard("m_grid", [&] { return Policy::completely_randomized(n, m); });
      }
    } else {
      const std::size_t m = r.count("m");
      guard("m", [&] { return Policy::completely_randomized(n, m); });
    }
  } else if (family == "all_or_none") {
    if (r.has("q_grid")) {
      for (double q : r.numbers("q_grid")) {
        guard("q_grid", [&] { return Policy::all_or_none(n, q); });
      }
    } else {
      const double q = r.number("q", 0.5);
      guard("q", [&] { return Policy::all_or_none(n, q); });
    }
  } else if (family == "conditioned") {
    const auto bases = parse_policy(r.raw("base"), g, r.field("base"));
    if (bases.size() != 1) r.fail("base", "expected a single base policy");
    const Json& fixed = r.raw("fixed");
    if (!fixed.is_object()) r.fail("fixed", "expected an object mapping unit label to 0/1");
    PartialAssignment pa;
    for (auto it = fixed.begin(); it != fixed.end(); ++it) {
      std::size_t unit = 0;
      try {
        std::size_t used = 0;
        unit = std::stoul(it.key(), &used);
        if (used != it.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        r.fail("fixed", "key '" + it.key() + "' is not a unit label");
      }
      if (unit < 1 || unit > n) r.fail("fixed", "unit " + it.key() + " outside [1, " + std::to_string(n) + "]");
      if (!it.value().is_number_unsigned() || it.value().get<unsigned>() > 1) {
        r.fail("fixed", "values must be 0 or 1");
      }
      pa.mask = with_unit(pa.mask, unit - 1);
      if (it.value().get<unsigned>() == 1) pa.values = with_unit(pa.values, unit - 1);
    }
    out.push_back(Policy::conditioned(bases.front(), pa));
  } else {
    r.fail("family", "unknown policy family '" + family +
                         "' (homogeneous_bernoulli, heterogeneous_bernoulli, "
                         "completely_randomized, all_or_none, conditioned)");
  }
  r.finish();
  return out;
}

inline FocalSpec parse_focal(const Json& j, const std::string& path) {
  static const std::set<std::string> known{"treated",         "untreated",
                                           "neighbor_union",  "non_neighbor_intersection",
                                           "by_exposure",     "full_population"};
  FocalSpec f;
  if (j.is_string()) {
    f.variant = j.get<std::string>();
  } else {
    ObjectReader r(j, path);
    f.variant = r.string("variant");
    if (f.variant == "by_exposure") f.level = r.count("level");
    r.finish();
  }
  if (!known.count(f.variant)) {
    throw ValidationError("field '" + path + "': unknown focal variant '" + f.variant + "'");
  }
  if (f.variant == "by_exposure" && j.is_string()) {
    throw ValidationError("field '" + path + "': by_exposure needs an object with a level");
  }
  return f;
}

inline EstimandRequest parse_estimand(const Json& j, const std::string& path) {
  static const std::set<std::string> known{
      "eao",  "efao",  "efao_contrast",      "avg_direct_effect",   "eate",
      "gate", "welfare", "avg_po_by_exposure", "avg_indirect_effect", "eao_decomposition"};
  EstimandRequest e;
  if (j.is_string()) {
    e.name = j.get<std::string>();
  } else {
    ObjectReader r(j, path);
    e.name = r.string("name");
    e.label = r.string("label", "");
    if (e.name == "efao") {
      e.focal = parse_focal(r.raw("focal"), r.field("focal"));
    } else if (e.name == "efao_contrast") {
      e.focal = r.has("focal") ? parse_focal(r.raw("focal"), r.field("focal"))
                               : FocalSpec{"treated", 0};
      e.focal2 = r.has("focal2") ? parse_focal(r.raw("focal2"), r.field("focal2"))
                                 : FocalSpec{"untreated", 0};
    } else if (e.name == "avg_po_by_exposure") {
      e.level = r.count("level");
    } else if (e.name == "eao_decomposition") {
      e.m = r.count("m");
    } else if (e.name == "welfare") {
      const Json& comps = r.raw("components");
      if (!comps.is_array()) r.fail("components", "expected an array");
      for (std::size_t k = 0; k < comps.size(); ++k) {
        ObjectReader c(comps[k], r.field("components") + "[" + std::to_string(k) + "]");
        FocalSpec f = parse_focal(c.raw("focal"), c.field("focal"));
        const double w = c.number("weight");
        c.finish();
        e.components.emplace_back(f, w);
      }
    }
    r.finish();
  }
  if (!known.count(e.name)) {
    throw ValidationError("field '" + path + ".name': unknown estimand '" + e.name + "'");
  }
  if (j.is_string() && (e.name == "efao" || e.name == "avg_po_by_exposure" ||
                        e.name == "eao_decomposition" || e.name == "welfare")) {
    throw ValidationError("field '" + path + "': estimand '" + e.name +
                          "' needs an object with its parameters");
  }
  if (j.is_string() && e.name == "efao_contrast") {
    e.focal = {"treated", 0};
    e.focal2 = {"untreated", 0};
  }
  return e;
}

inline EngineOptions parse_engine(const Json& j) {
  ObjectReader r(j, "engine");
  EngineOptions o;
  const std::string mode = r.string("mode", "exact");
  if (mode == "exact") {
    o.mode = Method::exact;
  } else if (mode == "mc") {
    o.mode = Method::monte_carlo;
  } else {
    r.fail("mode", "expected 'exact' or 'mc'");
  }
  o.n_samples = r.count("n_samples", o.n_samples);
  if (o.n_samples == 0) r.fail("n_samples", "must be >= 1");
  o.seed = r.seed("seed", o.seed);
  o.cap = r.count("cap", o.cap);
  o.threads = r.count("threads", o.threads);
  r.finish();
  return o;
}

inline Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir) {
  ObjectReader r(j, "");
  Scenario s;
  s.base_dir = base_dir;
  if (r.has("engine")) s.engine = parse_engine(r.raw("engine"));
  if (r.has("output")) {
    ObjectReader o(r.raw("output"), "output");
    s.out_dir = o.string("dir", ".");
    o.finish();
  }
  if (r.has("graph")) {
    s.graph = parse_graph(r.raw("graph"), base_dir, &s.graph_copies, &s.component);
  }
  auto need_graph = [&](const std::string& key) -> const Graph& {
    if (!s.graph) r.fail(key, "requires a 'graph' section");
    return *s.graph;
  };
  if (r.has("model")) s.model = parse_model(r.raw("model"), need_graph("model"), base_dir);
  if (r.has("models")) {
    const Json& ms = r.raw("models");
    if (!ms.is_array() || ms.empty()) r.fail("models", "expected a nonempty array");
    for (std::size_t k = 0; k < ms.size(); ++k) {
      ObjectReader m(ms[k], "models[" + std::to_string(k) + "]");
      NamedModel nm{m.string("name"), parse_model(m.raw("model"), need_graph("models"), base_dir,
                                                  m.field("model"))};
      m.finish();
      s.models.push_back(std::move(nm));
    }
  }
  if (r.has("exposure")) s.exposure = parse_exposure(r.raw("exposure"), &s.exposure_tolerance);
  if (r.has("policy")) {
    auto ps = parse_policy(r.raw("policy"), need_graph("policy"), "policy");
    s.policies.insert(s.policies.end(), ps.begin(), ps.end());
  }
  if (r.has("policies")) {
    const Json& ps = r.raw("policies");
    if (!ps.is_array() || ps.empty()) r.fail("policies", "expected a nonempty array");
    for (std::size_t k = 0; k < ps.size(); ++k) {
      auto more = parse_policy(ps[k], need_graph("policies"), "policies[" + std::to_string(k) + "]");
      s.policies.insert(s.policies.end(), more.begin(), more.end());
    }
  }
  if (r.has("neighborhoods")) {
    ObjectReader nr(r.raw("neighborhoods"), "neighborhoods");
    const std::string type = nr.string("type");
    const Graph& g = need_graph("neighborhoods");
    if (type == "graph") {
      s.neighborhoods = NeighborhoodStructure::from_graph(g);
    } else if (type == "unique_pairs") {
      auto targets = nr.counts("targets");
      if (targets.size() != g.n()) {
        nr.fail("targets", "expected " + std::to_string(g.n()) + " entries");
      }
      std::vector<Unit> zero_based;
      for (std::size_t t : targets) {
        if (t == 0) nr.fail("targets", "unit labels are 1-based");
        zero_based.push_back(t - 1);
      }
      try {
        s.neighborhoods = unique_pairs(zero_based);
      } catch (const ValidationError& e) {
        nr.fail("targets", e.what());
      }
    } else {
      nr.fail("type", "unknown neighborhood type '" + type + "' (graph, unique_pairs)");
    }
    nr.finish();
  }
  if (r.has("estimands")) {
    const Json& es = r.raw("estimands");
    if (!es.is_array()) r.fail("estimands", "expected an array");
    for (std::size_t k = 0; k < es.size(); ++k) {
      s.estimands.push_back(parse_estimand(es[k], "estimands[" + std::to_string(k) + "]"));
    }
  }
  if (r.has("equiv")) {
    ObjectReader er(r.raw("equiv"), "equiv");
    if (er.has("copies")) s.equiv.copies = er.counts("copies");
    for (std::size_t k : s.equiv.copies) {
      if (k == 0) er.fail("copies", "copy counts must be >= 1");
    }
    s.equiv.random_tables = er.count("random_tables", 0);
    s.equiv.table_seed = er.seed("table_seed", s.equiv.table_seed);
    er.finish();
  }
  if (r.has("biclique")) {
    ObjectReader br(r.raw("biclique"), "biclique");
    BicliqueSettings b;
    b.u = br.count("u", b.u);
    b.v = br.count("v", b.v);
    if (br.has("y_left")) b.y_left = br.numbers("y_left");
    if (br.has("y_right")) b.y_right = br.numbers("y_right");
    b.grid = br.count("grid", b.grid);
    b.step = br.number("step", b.step);
    b.margin = br.number("margin", b.margin);
    if (br.has("p_values")) b.p_values = br.numbers("p_values");
    if (br.has("copies")) b.copies = br.counts("copies");
    br.finish();
    s.biclique = b;
  }
  r.finish();

  // Cross-references.
  const bool needs_exposure = [&] {
    for (const auto& e : s.estimands) {
      if (e.name == "avg_po_by_exposure" || e.focal.variant == "by_exposure" ||
          e.focal2.variant == "by_exposure") {
        return true;
      }
      for (const auto& c : e.components) {
        if (c.first.variant == "by_exposure") return true;
      }
    }
    return false;
  }();
  if (needs_exposure && !s.exposure) {
    throw ValidationError("field 'exposure': required by a by-exposure estimand");
  }
  if (s.exposure) {
    const std::size_t levels = s.exposure->level_count();
    for (std::size_t k = 0; k < s.estimands.size(); ++k) {
      const auto& e = s.estimands[k];
      auto check = [&](std::size_t level) {
        if (level >= levels) {
          throw ValidationError("field 'estimands[" + std::to_string(k) + "]': level " +
                                std::to_string(level) + " outside exposure map " +
                                s.exposure->name());
        }
      };
      if (e.name == "avg_po_by_exposure") check(e.level);
      if (e.focal.variant == "by_exposure") check(e.focal.level);
      if (e.focal2.variant == "by_exposure") check(e.focal2.level);
      for (const auto& c : e.components) {
        if (c.first.variant == "by_exposure") check(c.first.level);
      }
    }
  }
  if (s.graph) {
    for (std::size_t k = 0; k < s.estimands.size(); ++k) {
      const auto& e = s.estimands[k];
      if (e.name == "eao_decomposition" && (e.m < 1 || e.m > s.graph->n())) {
        throw ValidationError("field 'estimands[" + std::to_string(k) + "].m': must lie in [1, " +
                              std::to_string(s.graph->n()) + "]");
      }
    }
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open scenario file " + file.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("scenario " + file.string() + ": " + e.what());
  }
  return parse_scenario(j, file.has_parent_path() ? file.parent_path() : std::filesystem::path("."));
}

}  // namespace netpol::cli
