#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netpol/assignment.hpp"
#include "netpol/engine.hpp"
#include "netpol/errors.hpp"
#include "netpol/exposure.hpp"
#include "netpol/graph.hpp"
#include "netpol/policy.hpp"
#include "netpol/science.hpp"

namespace netpol {

// Rule sending the treated set S (an assignment) to the set of focal units N_S.
//
// The neighborhood variants read N_i as the units whose treatment reaches i:
// neighbor_union makes i focal iff N_i meets S, and non_neighbor_intersection
// makes i focal iff N_i misses S. With symmetric neighborhoods (graph adjacency)
// these are exactly the union of N_j over treated j and its complement.
class FocalMapping {
 public:
  enum class Variant {
    treated,
    untreated,
    neighbor_union,
    non_neighbor_intersection,
    by_exposure,
    full_population,
    custom
  };

  static FocalMapping treated() { return FocalMapping(Variant::treated, "treated"); }
  static FocalMapping untreated() { return FocalMapping(Variant::untreated, "untreated"); }
  static FocalMapping full_population() {
    return FocalMapping(Variant::full_population, "full_population");
  }
  static FocalMapping neighbor_union(NeighborhoodStructure ns) {
    FocalMapping f(Variant::neighbor_union, "neighbor_union");
    f.neighborhoods_ = std::move(ns);
    return f;
  }
  static FocalMapping non_neighbor_intersection(NeighborhoodStructure ns) {
    FocalMapping f(Variant::non_neighbor_intersection, "non_neighbor_intersection");
    f.neighborhoods_ = std::move(ns);
    return f;
  }
  static FocalMapping by_exposure(ExposureMap map, Graph g, std::size_t level) {
    if (level >= map.level_count()) {
      throw ValidationError("by_exposure level " + std::to_string(level) + " outside map " +
                            map.name());
    }
    FocalMapping f(Variant::by_exposure, "by_exposure(" + map.name() + "=" + std::to_string(level) + ")");
    f.map_ = std::move(map);
    f.graph_ = std::move(g);
    f.level_ = level;
    return f;
  }
  static FocalMapping custom(std::string name, std::function<Assignment(Assignment)> rule) {
    FocalMapping f(Variant::custom, std::move(name));
    f.rule_ = std::move(rule);
    return f;
  }

  Variant variant() const noexcept { return variant_; }
  const std::string& name() const noexcept { return name_; }

  void check_size(std::size_t n) const {
    std::optional<std::size_t> m;
    if (neighborhoods_) m = neighborhoods_->n();
    if (graph_) m = graph_->n();
    if (m && *m != n) {
      throw ValidationError("focal mapping " + name_ + " is defined on n=" + std::to_string(*m) +
                            " units, table has n=" + std::to_string(n));
    }
  }

  Assignment focal_set(Assignment z, std::size_t n) const {
    const Assignment everyone = all_units(n);
    switch (variant_) {
      case Variant::treated:
        return z & everyone;
      case Variant::untreated:
        return ~z & everyone;
      case Variant::full_population:
        return everyone;
      case Variant::neighbor_union:
      case Variant::non_neighbor_intersection: {
        Assignment reached = 0;
        for (Unit i = 0; i < n; ++i) {
          if ((neighborhoods_->mask(i) & z) != 0) reached = with_unit(reached, i);
        }
        return variant_ == Variant::neighbor_union ? reached : (~reached & everyone);
      }
      case Variant::by_exposure: {
        Assignment out = 0;
        for (Unit i = 0; i < n; ++i) {
          if (map_->level(*graph_, i, z) == level_) out = with_unit(out, i);
        }
        return out;
      }
      case Variant::custom:
        return rule_(z) & everyone;
    }
    return 0;
  }

 private:
  FocalMapping(Variant v, std::string name) : variant_(v), name_(std::move(name)) {}

  Variant variant_;
  std::string name_;
  std::optional<NeighborhoodStructure> neighborhoods_;
  std::optional<ExposureMap> map_;
  std::optional<Graph> graph_;
  std::size_t level_ = 0;
  std::function<Assignment(Assignment)> rule_;
};

namespace detail {

inline Functional focal_average_functional(const FocalMapping& fm, std::size_t n) {
  Functional f;
  f.value = [&fm, n](Assignment z, std::span<const double> y) {
    const Assignment focal = fm.focal_set(z, n);
    double s = 0.0;
    for (Unit i : members(focal)) s += y[i];
    return s / static_cast<double>(treated_count(focal));
  };
  f.event = [&fm, n](Assignment z) { return fm.focal_set(z, n) != 0; };
  f.event_name = "nonempty focal set (" + fm.name() + ")";
  return f;
}

inline double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

inline void require_nondegenerate(const Policy& pi, Unit j, const char* what) {
  const double p = pi.marginal(j);
  if (!(p > 0.0)) {
    throw ZeroProbabilityEvent("Z_" + std::to_string(j + 1) + "=1 (" + what + "; unit " +
                               std::to_string(j + 1) + " is never treated) under " + pi.describe());
  }
  if (!(p < 1.0)) {
    throw ZeroProbabilityEvent("Z_" + std::to_string(j + 1) + "=0 (" + what + "; unit " +
                               std::to_string(j + 1) + " is always treated) under " + pi.describe());
  }
}

// sum over pairs (unit, conditioning unit) of the ratio contrast
// E[Y_i Z_j]/E[Z_j] - E[Y_i (1 - Z_j)]/E[1 - Z_j], each pair weighted.
struct PairTerm {
  Unit outcome;
  Unit conditioning;
  double weight;
};

inline EstimandResult conditional_contrast(const std::vector<PairTerm>& pairs, const Policy& pi,
                                           const ScienceTable& table, const Engine& engine,
                                           std::uint64_t stream) {
  VectorFunctional f;
  f.dim = 4 * pairs.size();
  f.value = [&pairs](Assignment z, std::span<const double> y, std::span<double> out) {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double zj = is_treated(z, pairs[k].conditioning) ? 1.0 : 0.0;
      const double yi = y[pairs[k].outcome];
      out[4 * k] = yi * zj;
      out[4 * k + 1] = zj;
      out[4 * k + 2] = yi * (1.0 - zj);
      out[4 * k + 3] = 1.0 - zj;
    }
  };
  SmoothMap g;
  g.value = [&pairs, &pi](std::span<const double> m) {
    double s = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (!(m[4 * k + 1] > 0.0) || !(m[4 * k + 3] > 0.0)) {
        throw ZeroProbabilityEvent("Z_" + std::to_string(pairs[k].conditioning + 1) +
                                   " never varies in the computation under " + pi.describe());
      }
      s += pairs[k].weight * (m[4 * k] / m[4 * k + 1] - m[4 * k + 2] / m[4 * k + 3]);
    }
    return s;
  };
  g.gradient = [&pairs](std::span<const double> m, std::span<double> grad) {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double w = pairs[k].weight;
      grad[4 * k] = w / m[4 * k + 1];
      grad[4 * k + 1] = -w * m[4 * k] / (m[4 * k + 1] * m[4 * k + 1]);
      grad[4 * k + 2] = -w / m[4 * k + 3];
      grad[4 * k + 3] = w * m[4 * k + 2] / (m[4 * k + 3] * m[4 * k + 3]);
    }
  };
  return engine.smooth(f, g, pi, table, stream);
}

inline EstimandResult combine_difference(const EstimandResult& a, const EstimandResult& b) {
  EstimandResult r;
  r.value = a.value - b.value;
  r.method = a.method;
  r.std_error = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
  r.event_probability = std::min(a.event_probability, b.event_probability);
  r.n_samples = a.n_samples;
  return r;
}

}  // namespace detail

// Expected average outcome E_pi[(1/n) sum_i Y_i].
inline EstimandResult eao(const Policy& pi, const ScienceTable& table, const Engine& engine = {}) {
  Functional f;
  f.value = [](Assignment, std::span<const double> y) {
    double s = 0.0;
    for (double v : y) s += v;
    return s / static_cast<double>(y.size());
  };
  return engine.expectation(f, pi, table);
}

// (1/n) sum_i E_pi[Y_i], each unit's expectation taken separately.
inline double eao_unit_route(const Policy& pi, const ScienceTable& table,
                             const EngineOptions& opts = {}) {
  const std::size_t n = table.n();
  VectorFunctional f;
  f.dim = n;
  f.value = [](Assignment, std::span<const double> y, std::span<double> out) {
    std::copy(y.begin(), y.end(), out.begin());
  };
  const auto m = exact_means(f, pi, table, opts);
  double s = 0.0;
  for (double v : m) s += v;
  return s / static_cast<double>(n);
}

// Per-unit weighted form of the focal average:
// (1/n) sum_i E_pi[Y_i 1{i in N_S} / (|N_S| / n) | |N_S| > 0].
inline double efao_unit_route(const Policy& pi, const ScienceTable& table, const FocalMapping& fm,
                              const EngineOptions& opts = {}) {
  const std::size_t n = table.n();
  fm.check_size(n);
  VectorFunctional f;
  f.dim = n + 1;
  f.value = [&fm, n](Assignment z, std::span<const double> y, std::span<double> out) {
    const Assignment focal = fm.focal_set(z, n);
    std::fill(out.begin(), out.end(), 0.0);
    if (focal == 0) return;
    const double scale = static_cast<double>(n) / static_cast<double>(treated_count(focal));
    for (Unit i : members(focal)) out[i] = y[i] * scale;
    out[n] = 1.0;
  };
  const auto m = exact_means(f, pi, table, opts);
  if (!(m[n] > 0.0)) {
    throw ZeroProbabilityEvent("nonempty focal set (" + fm.name() + ") under " + pi.describe());
  }
  double s = 0.0;
  for (Unit i = 0; i < n; ++i) s += m[i] / m[n];
  return s / static_cast<double>(n);
}

// Expected focal average outcome E_pi[avg_{i in N_S} Y_i | |N_S| > 0]. Exact mode
// also evaluates the per-unit weighted form and fails if the two disagree.
inline EstimandResult efao(const Policy& pi, const ScienceTable& table, const FocalMapping& fm,
                           const Engine& engine = {}, std::uint64_t stream = 0) {
  fm.check_size(table.n());
  const auto r = engine.expectation(detail::focal_average_functional(fm, table.n()), pi, table, stream);
  if (engine.exact()) {
    const double unit_route = efao_unit_route(pi, table, fm, engine.options());
    if (detail::relative_gap(r.value, unit_route) > 1e-9) {
      throw ComputationError("focal average routes disagree for " + fm.name() + ": " +
                             format_double(r.value) + " vs " + format_double(unit_route));
    }
  }
  return r;
}

// efao(fm) - efao(fm2); under Monte Carlo the two terms use independent streams.
inline EstimandResult efao_contrast(const Policy& pi, const ScienceTable& table,
                                    const FocalMapping& fm, const FocalMapping& fm2,
                                    const Engine& engine = {}, std::uint64_t stream = 0) {
  const auto a = efao(pi, table, fm, engine, 2 * stream);
  const auto b = efao(pi, table, fm2, engine, 2 * stream + 1);
  return detail::combine_difference(a, b);
}

// (1/n) sum_i [E(Y_i | Z_i = 1) - E(Y_i | Z_i = 0)].
inline EstimandResult avg_direct_effect(const Policy& pi, const ScienceTable& table,
                                        const Engine& engine = {}) {
  detail::check_shapes(pi, table);
  const std::size_t n = table.n();
  std::vector<detail::PairTerm> pairs;
  for (Unit i = 0; i < n; ++i) {
    detail::require_nondegenerate(pi, i, "own treatment");
    pairs.push_back({i, i, 1.0 / static_cast<double>(n)});
  }
  return detail::conditional_contrast(pairs, pi, table, engine, 0);
}

// (1/n) sum_i (1/|N_i|) sum_{j in N_i} [E(Y_i | Z_j = 1) - E(Y_i | Z_j = 0)].
inline EstimandResult avg_indirect_effect(const Policy& pi, const ScienceTable& table,
                                          const NeighborhoodStructure& ns,
                                          const Engine& engine = {}) {
  detail::check_shapes(pi, table);
  const std::size_t n = table.n();
  if (ns.n() != n) throw ValidationError("neighborhood structure and table disagree on n");
  std::vector<detail::PairTerm> pairs;
  for (Unit i = 0; i < n; ++i) {
    const auto& nb = ns.of(i);
    if (nb.empty()) {
      throw ValidationError("avg_indirect_effect: unit " + std::to_string(i + 1) +
                            " has an empty neighborhood");
    }
    for (Unit j : nb) {
      detail::require_nondegenerate(pi, j, "neighbor treatment");
      pairs.push_back({i, j, 1.0 / (static_cast<double>(n) * static_cast<double>(nb.size()))});
    }
  }
  return detail::conditional_contrast(pairs, pi, table, engine, 0);
}

// (1/n) sum_i E[y_i(1, Z_-i) - y_i(0, Z_-i)] with Z_-i drawn from its unconditional
// marginal under pi (Z_i summed out), which for any pi equals
// sum_z pi(z) (1/n) sum_i [y_i(z with i treated) - y_i(z with i untreated)].
inline EstimandResult eate(const ScienceTable& table, const Policy& pi, const Engine& engine = {}) {
  const std::size_t n = table.n();
  Functional f;
  f.value = [&table, n](Assignment z, std::span<const double>) {
    double s = 0.0;
    for (Unit i = 0; i < n; ++i) s += table.at(i, with_unit(z, i)) - table.at(i, without_unit(z, i));
    return s / static_cast<double>(n);
  };
  return engine.expectation(f, pi, table);
}

// (1/n) sum_i [y_i(all treated) - y_i(none treated)].
inline double gate(const ScienceTable& table) {
  const std::size_t n = table.n();
  if (n == 0) return 0.0;
  const Assignment all = all_units(n);
  double s = 0.0;
  for (Unit i = 0; i < n; ++i) s += table.at(i, all) - table.at(i, 0);
  return s / static_cast<double>(n);
}

// Ybar(d) = (1/n) sum_i y_i(d), the common outcome on each unit's level-d set.
inline double avg_po_by_exposure(const ScienceTable& table, const ExposureMap& map, const Graph& g,
                                 std::size_t d, double tolerance = 0.0,
                                 std::size_t cap = kDefaultEnumerationCap) {
  if (d >= map.level_count()) {
    throw ValidationError("exposure level " + std::to_string(d) + " outside map " + map.name());
  }
  const auto report = check_consistency(table, map, g, tolerance, cap);
  if (!report.consistent) throw InconsistentExposure(*report.witness, g.n());
  const std::size_t n = g.n();
  const std::uint64_t total = assignment_count(n);
  double s = 0.0;
  for (Unit i = 0; i < n; ++i) {
    std::optional<Assignment> hit;
    for (Assignment z = 0; z < total && !hit; ++z) {
      if (map.level(g, i, z) == d) hit = z;
    }
    if (!hit) {
      throw ComputationError("unit " + std::to_string(i + 1) + " cannot attain exposure level " +
                             std::to_string(d) + " under " + map.name());
    }
    s += table.at(i, *hit);
  }
  return s / static_cast<double>(n);
}

// (1/n) sum_i E_pi[Y_i | D_i = d]; equals avg_po_by_exposure for a consistent map
// whenever every unit reaches level d with positive probability.
inline double avg_conditional_on_exposure(const Policy& pi, const ScienceTable& table,
                                          const ExposureMap& map, const Graph& g, std::size_t d,
                                          const EngineOptions& opts = {}) {
  const std::size_t n = table.n();
  VectorFunctional f;
  f.dim = 2 * n;
  f.value = [&](Assignment z, std::span<const double> y, std::span<double> out) {
    for (Unit i = 0; i < n; ++i) {
      const bool hit = map.level(g, i, z) == d;
      out[2 * i] = hit ? y[i] : 0.0;
      out[2 * i + 1] = hit ? 1.0 : 0.0;
    }
  };
  const auto m = exact_means(f, pi, table, opts);
  double s = 0.0;
  for (Unit i = 0; i < n; ++i) {
    if (!(m[2 * i + 1] > 0.0)) {
      throw ZeroProbabilityEvent("D_" + std::to_string(i + 1) + "=" + std::to_string(d) +
                                 " under " + pi.describe());
    }
    s += m[2 * i] / m[2 * i + 1];
  }
  return s / static_cast<double>(n);
}

struct Decomposition {
  double delta = 0.0;
  double direct = 0.0;
  double spillover = 0.0;
};

// EAO(m of n) - EAO(m-1 of n), split by drawing a (m-1)-of-n assignment and then
// one more unit uniformly from the untreated: `direct` is the expected change in
// that unit's own outcome, `spillover` the change in everyone else's (both / n).
inline Decomposition eao_decomposition(const ScienceTable& table, std::size_t m,
                                       const EngineOptions& opts = {}) {
  const std::size_t n = table.n();
  if (m < 1 || m > n) {
    throw ValidationError("eao_decomposition: m=" + std::to_string(m) + " outside [1, " +
                          std::to_string(n) + "]");
  }
  require_enumerable(n, opts.cap);
  EngineOptions exact = opts;
  exact.mode = Method::exact;
  const Engine engine(exact);
  Decomposition out;
  out.delta = eao(Policy::completely_randomized(n, m), table, engine).value -
              eao(Policy::completely_randomized(n, m - 1), table, engine).value;

  const double weight = 1.0 / (binomial_coefficient(n, m - 1) * static_cast<double>(n - m + 1) *
                               static_cast<double>(n));
  detail::CompensatedSum direct;
  detail::CompensatedSum spill;
  const std::uint64_t total = assignment_count(n);
  std::vector<double> before(n);
  std::vector<double> after(n);
  for (Assignment z = 0; z < total; ++z) {
    if (treated_count(z) != m - 1) continue;
    table.column(z, before);
    for (Unit j = 0; j < n; ++j) {
      if (is_treated(z, j)) continue;
      table.column(with_unit(z, j), after);
      double others = 0.0;
      for (Unit i = 0; i < n; ++i) {
        if (i != j) others += after[i] - before[i];
      }
      direct.add(weight * (after[j] - before[j]));
      spill.add(weight * others);
    }
  }
  out.direct = direct.total();
  out.spillover = spill.total();
  return out;
}

struct WelfareComponent {
  FocalMapping focal;
  double weight;
};

// sum_k weight_k * efao(focal_k); an empty list gives 0.
inline EstimandResult welfare(const Policy& pi, const ScienceTable& table,
                              const std::vector<WelfareComponent>& components,
                              const Engine& engine = {}) {
  EstimandResult r;
  r.method = engine.options().mode;
  double var = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto part = efao(pi, table, components[k].focal, engine, k);
    r.value += components[k].weight * part.value;
    var += components[k].weight * components[k].weight * part.std_error * part.std_error;
    r.event_probability = k == 0 ? part.event_probability
                                 : std::min(r.event_probability, part.event_probability);
    r.n_samples = part.n_samples;
  }
  r.std_error = std::sqrt(var);
  return r;
}

struct PolicyChoice {
  std::vector<double> eao;
  std::size_t selected = 0;
};

// EAO per policy and the maximizer; near-ties (relative 1e-12) go to the smaller
// policy parameter.
inline PolicyChoice choose_policy(const std::vector<Policy>& grid, const ScienceTable& table,
                                  const Engine& engine = {}) {
  if (grid.empty()) throw ValidationError("policy grid is empty");
  PolicyChoice c;
  for (const auto& pi : grid) c.eao.push_back(eao(pi, table, engine).value);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double best = c.eao[c.selected];
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    if (c.eao[k] > best + tol) {
      c.selected = k;
    } else if (std::abs(c.eao[k] - best) <= tol &&
               grid[k].parameter() < grid[c.selected].parameter()) {
      c.selected = k;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Equivalence between the two averaging routes.

enum class Verdict { equal, asymptotic, not_equal };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::equal:
      return "equal";
    case Verdict::asymptotic:
      return "asymptotic";
    case Verdict::not_equal:
      return "not-equal";
  }
  return "";
}

struct RoutePair {
  std::string left_name;
  double left;
  std::string right_name;
  double right;
  double residual;
};

struct CopyResidual {
  std::size_t copies;
  double contrast;
  double reference;
  double residual;
};

struct EquivalenceReport {
  std::string scenario;
  std::vector<RoutePair> pairs;
  std::size_t primary = 0;  // index into pairs deciding the verdict
  std::vector<CopyResidual> copy_series;
  Verdict verdict = Verdict::not_equal;
};

inline constexpr double kEqualityTolerance = 1e-9;

// Treated-minus-untreated focal contrast on k i.i.d. copies of the component.
inline double copies_treated_contrast(const CopiesFactorization& copies) {
  const std::size_t c = copies.component_table().n();
  const auto treated = copies.focal_average([c](Assignment z) { return z & all_units(c); },
                                            "at least one treated unit");
  const auto untreated = copies.focal_average([c](Assignment z) { return ~z & all_units(c); },
                                              "at least one untreated unit");
  return treated.value - untreated.value;
}

// Compares efao_contrast(treated, untreated) with the quantity it should match
// under pi's family: avg_direct_effect (completely randomized), GATE (all-or-none),
// EATE (Bernoulli, where homogeneous Bernoulli adds a residual series over disjoint
// copies of the table's graph). Verdict: "equal" if the primary residual is below
// 1e-9, "asymptotic" if the copy series strictly decreases, else "not-equal".
inline EquivalenceReport equivalence_report(const ScienceTable& table, const Graph& g,
                                            const Policy& pi,
                                            const std::vector<std::size_t>& copies = {1, 2, 4, 8},
                                            const EngineOptions& opts = {}) {
  if (g.n() != table.n()) throw ValidationError("graph and table disagree on n");
  EngineOptions exact_opts = opts;
  exact_opts.mode = Method::exact;
  const Engine engine(exact_opts);
  const std::string family = pi.family_name();

  EquivalenceReport rep;
  rep.scenario = pi.describe() + " on n=" + std::to_string(g.n()) + " units, " +
                 std::to_string(g.edge_count()) + " edges";

  const auto treated = FocalMapping::treated();
  const auto untreated = FocalMapping::untreated();
  const double contrast = efao_contrast(pi, table, treated, untreated, engine).value;
  const double dual = efao_unit_route(pi, table, treated, exact_opts) -
                      efao_unit_route(pi, table, untreated, exact_opts);
  rep.pairs.push_back({"efao_contrast(treated,untreated)", contrast,
                       "efao_contrast_unit_weighted_form", dual, std::abs(contrast - dual)});

  bool direct_defined = true;
  for (Unit i = 0; i < pi.n(); ++i) {
    const double p = pi.marginal(i);
    if (!(p > 0.0 && p < 1.0)) direct_defined = false;
  }
  std::optional<std::size_t> direct_index;
  if (direct_defined) {
    const double direct = avg_direct_effect(pi, table, engine).value;
    direct_index = rep.pairs.size();
    rep.pairs.push_back({"efao_contrast(treated,untreated)", contrast, "avg_direct_effect", direct,
                         std::abs(contrast - direct)});
  }

  if (family == "all_or_none") {
    const double gt = gate(table);
    rep.primary = rep.pairs.size();
    rep.pairs.push_back({"efao_contrast(treated,untreated)", contrast, "gate", gt,
                         std::abs(contrast - gt)});
  } else if (family == "homogeneous_bernoulli" || family == "heterogeneous_bernoulli") {
    const double e = eate(table, pi, engine).value;
    rep.primary = rep.pairs.size();
    rep.pairs.push_back({"efao_contrast(treated,untreated)", contrast, "eate", e,
                         std::abs(contrast - e)});
    if (family == "homogeneous_bernoulli") {
      for (std::size_t k : copies) {
        const CopiesFactorization fact(table, pi, k, exact_opts.cap);
        const double ck = copies_treated_contrast(fact);
        rep.copy_series.push_back({k, ck, e, std::abs(ck - e)});
      }
    }
  } else if (direct_index) {
    rep.primary = *direct_index;
  } else {
    rep.primary = 0;
  }

  if (rep.pairs[rep.primary].residual < kEqualityTolerance && rep.primary != 0) {
    rep.verdict = Verdict::equal;
  } else if (rep.copy_series.size() >= 2) {
    bool decreasing = true;
    for (std::size_t k = 1; k < rep.copy_series.size(); ++k) {
      if (!(rep.copy_series[k].residual < rep.copy_series[k - 1].residual)) decreasing = false;
    }
    rep.verdict = decreasing ? Verdict::asymptotic : Verdict::not_equal;
  } else {
    rep.verdict = Verdict::not_equal;
  }
  return rep;
}

}  // namespace netpol
