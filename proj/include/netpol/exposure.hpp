#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "netpol/assignment.hpp"
#include "netpol/errors.hpp"
#include "netpol/graph.hpp"
#include "netpol/policy.hpp"
#include "netpol/science.hpp"

namespace netpol {

namespace mapping {

// d_i(z) = z_i
struct OwnTreatment {};
// d_i(z) = min(treated neighbors, cap); level cap reads "cap or more".
struct NeighborCountCapped {
  std::size_t cap;
};
// d_i(z) = 2 z_i + 1{some neighbor treated}
struct OwnAndAnyNeighbor {};
struct Custom {
  std::string name;
  std::size_t levels;
  std::function<std::size_t(Unit, Assignment, const Graph&)> fn;
};

using Family = std::variant<OwnTreatment, NeighborCountCapped, OwnAndAnyNeighbor, Custom>;

}  // namespace mapping

// Exposure mapping with levels 0..level_count()-1.
class ExposureMap {
 public:
  static ExposureMap own_treatment() { return ExposureMap(mapping::OwnTreatment{}); }
  static ExposureMap neighbor_count_capped(std::size_t cap) {
    if (cap == 0) throw ValidationError("neighbor_count_capped requires cap >= 1");
    return ExposureMap(mapping::NeighborCountCapped{cap});
  }
  static ExposureMap own_and_any_neighbor() { return ExposureMap(mapping::OwnAndAnyNeighbor{}); }
  static ExposureMap custom(std::string name, std::size_t levels,
                            std::function<std::size_t(Unit, Assignment, const Graph&)> fn) {
    if (levels == 0 || !fn) throw ValidationError("custom exposure map needs levels and a function");
    return ExposureMap(mapping::Custom{std::move(name), levels, std::move(fn)});
  }

  const mapping::Family& family() const noexcept { return family_; }

  std::size_t level_count() const {
    return std::visit(
        [](const auto& f) -> std::size_t {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, mapping::OwnTreatment>) return 2;
          if constexpr (std::is_same_v<F, mapping::NeighborCountCapped>) return f.cap + 1;
          if constexpr (std::is_same_v<F, mapping::OwnAndAnyNeighbor>) return 4;
          if constexpr (std::is_same_v<F, mapping::Custom>) return f.levels;
        },
        family_);
  }

  std::string name() const {
    return std::visit(
        [](const auto& f) -> std::string {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, mapping::OwnTreatment>) return "own_treatment";
          if constexpr (std::is_same_v<F, mapping::NeighborCountCapped>) {
            return "neighbor_count_capped(" + std::to_string(f.cap) + ")";
          }
          if constexpr (std::is_same_v<F, mapping::OwnAndAnyNeighbor>) return "own_and_any_neighbor";
          if constexpr (std::is_same_v<F, mapping::Custom>) return f.name;
        },
        family_);
  }

  std::size_t level(const Graph& g, Unit i, Assignment z) const {
    return std::visit(
        [&](const auto& f) -> std::size_t {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, mapping::OwnTreatment>) {
            return is_treated(z, i) ? 1 : 0;
          } else if constexpr (std::is_same_v<F, mapping::NeighborCountCapped>) {
            const std::size_t k = g.treated_neighbors(i, z);
            return k < f.cap ? k : f.cap;
          } else if constexpr (std::is_same_v<F, mapping::OwnAndAnyNeighbor>) {
            return (is_treated(z, i) ? 2U : 0U) + ((g.neighbor_mask(i) & z) != 0 ? 1U : 0U);
          } else {
            const std::size_t d = f.fn(i, z, g);
            if (d >= f.levels) {
              throw ComputationError("custom exposure map '" + f.name + "' returned level " +
                                     std::to_string(d) + " outside [0, " +
                                     std::to_string(f.levels) + ")");
            }
            return d;
          }
        },
        family_);
  }

 private:
  explicit ExposureMap(mapping::Family f) : family_(std::move(f)) {}
  mapping::Family family_;
};

inline std::size_t exposure_of(const ExposureMap& map, const Graph& g, Unit i, Assignment z) {
  if (i >= g.n()) throw ValidationError("unit index out of range in exposure_of");
  return map.level(g, i, z);
}

// Exact pmf of D_i under pi, by enumeration.
inline std::vector<double> exposure_distribution(const ExposureMap& map, const Graph& g, Unit i,
                                                 const Policy& pi,
                                                 std::size_t cap = kDefaultEnumerationCap) {
  if (pi.n() != g.n()) throw ValidationError("policy and graph disagree on n");
  if (i >= g.n()) throw ValidationError("unit index out of range in exposure_distribution");
  require_enumerable(g.n(), cap);
  std::vector<double> pmf(map.level_count(), 0.0);
  const std::uint64_t total = assignment_count(g.n());
  for (Assignment z = 0; z < total; ++z) {
    const double w = pi.pmf(z);
    if (w > 0.0) pmf[map.level(g, i, z)] += w;
  }
  return pmf;
}

struct ConsistencyWitness {
  Unit unit;
  std::size_t level;
  Assignment representative;
  Assignment offender;
  double representative_outcome;
  double offender_outcome;
};

struct ConsistencyReport {
  bool consistent = true;
  std::optional<ConsistencyWitness> witness;
};

class InconsistentExposure : public ComputationError {
 public:
  InconsistentExposure(const ConsistencyWitness& w, std::size_t n)
      : ComputationError("exposure mapping inconsistent with outcomes: unit " +
                         std::to_string(w.unit + 1) + " at level " + std::to_string(w.level) +
                         " has y(" + to_bit_string(w.representative, n) +
                         ")=" + format_double(w.representative_outcome) + " but y(" +
                         to_bit_string(w.offender, n) + ")=" + format_double(w.offender_outcome)),
        witness_(w) {}

  const ConsistencyWitness& witness() const noexcept { return witness_; }

 private:
  ConsistencyWitness witness_;
};

// Outcomes must be constant on every level set of every unit. Per unit, the
// first assignment (ascending) reaching a level is its representative and every
// later one is compared against it; the lowest offending unit is reported.
inline ConsistencyReport check_consistency(const ScienceTable& table, const ExposureMap& map,
                                           const Graph& g, double tolerance = 0.0,
                                           std::size_t cap = kDefaultEnumerationCap) {
  if (table.n() != g.n()) throw ValidationError("table and graph disagree on n");
  require_enumerable(g.n(), cap);
  const std::size_t n = g.n();
  const std::uint64_t total = assignment_count(n);
  const std::size_t levels = map.level_count();
  for (Unit i = 0; i < n; ++i) {
    std::vector<std::optional<Assignment>> rep(levels);
    for (Assignment z = 0; z < total; ++z) {
      const std::size_t d = map.level(g, i, z);
      if (!rep[d]) {
        rep[d] = z;
        continue;
      }
      const double y0 = table.at(i, *rep[d]);
      const double y1 = table.at(i, z);
      if (!(std::abs(y1 - y0) <= tolerance)) {
        return {false, ConsistencyWitness{i, d, *rep[d], z, y0, y1}};
      }
    }
  }
  return {true, std::nullopt};
}

// True iff the witness still violates the level-set property when re-evaluated.
inline bool witness_holds(const ConsistencyWitness& w, const ScienceTable& table,
                          const ExposureMap& map, const Graph& g, double tolerance = 0.0) {
  return w.representative != w.offender &&
         map.level(g, w.unit, w.representative) == map.level(g, w.unit, w.offender) &&
         !(std::abs(table(w.unit, w.representative) - table(w.unit, w.offender)) <= tolerance);
}

}  // namespace netpol
