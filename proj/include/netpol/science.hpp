#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "netpol/assignment.hpp"
#include "netpol/errors.hpp"
#include "netpol/graph.hpp"
#include "netpol/random.hpp"

namespace netpol {

namespace model {

// y_i(z) = alpha + tau * z_i
struct OwnTreatment {
  double alpha = 0.0;
  double tau = 1.0;
};

// y_i(z) = number of treated neighbors of i
struct TreatedNeighborCount {};

// y_i(z) = c_i * 1{exactly one treated neighbor}
struct OneTreatedNeighborIndicator {
  std::vector<double> c;
};

// y_i(z) = b_i
struct ConstantBaseline {
  std::vector<double> b;
};

// y_i(z) = values[i][min(treated neighbors, cap)]. Exposure-respecting by construction.
struct ExposureResponse {
  std::size_t cap = 0;
  std::vector<std::vector<double>> values;
};

// Dense table, column-major: entry (i, z) at z * n + i.
struct ExplicitTable {
  std::size_t n = 0;
  std::shared_ptr<const std::vector<double>> values;
};

using Term = std::variant<OwnTreatment, TreatedNeighborCount, OneTreatedNeighborIndicator,
                          ConstantBaseline, ExposureResponse, ExplicitTable>;

inline const char* family_name(const Term& t) {
  return std::visit(
      [](const auto& m) -> const char* {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, OwnTreatment>) return "own_treatment";
        if constexpr (std::is_same_v<M, TreatedNeighborCount>) return "treated_neighbor_count";
        if constexpr (std::is_same_v<M, OneTreatedNeighborIndicator>) {
          return "one_treated_neighbor_indicator";
        }
        if constexpr (std::is_same_v<M, ConstantBaseline>) return "constant_baseline";
        if constexpr (std::is_same_v<M, ExposureResponse>) return "exposure_response";
        if constexpr (std::is_same_v<M, ExplicitTable>) return "explicit_table";
      },
      t);
}

}  // namespace model

// A potential-outcome function y_i(z) given as a weighted sum of named families.
// Evaluation is a pure function of (i, z, graph).
class OutcomeModel {
 public:
  struct WeightedTerm {
    double weight;
    model::Term term;
  };

  OutcomeModel() = default;
  OutcomeModel(model::Term term) : terms_{{1.0, std::move(term)}} {}  // NOLINT

  static OutcomeModel own_treatment(double alpha = 0.0, double tau = 1.0) {
    return OutcomeModel(model::OwnTreatment{alpha, tau});
  }
  static OutcomeModel treated_neighbor_count() { return OutcomeModel(model::TreatedNeighborCount{}); }
  static OutcomeModel one_treated_neighbor_indicator(std::vector<double> c) {
    return OutcomeModel(model::OneTreatedNeighborIndicator{std::move(c)});
  }
  static OutcomeModel constant_baseline(std::vector<double> b) {
    return OutcomeModel(model::ConstantBaseline{std::move(b)});
  }
  static OutcomeModel exposure_response(std::size_t cap, std::vector<std::vector<double>> values) {
    return OutcomeModel(model::ExposureResponse{cap, std::move(values)});
  }
  static OutcomeModel explicit_table(std::size_t n, std::vector<double> column_major) {
    return OutcomeModel(model::ExplicitTable{
        n, std::make_shared<const std::vector<double>>(std::move(column_major))});
  }

  // sum_k weight_k * model_k, flattened.
  static OutcomeModel linear_combination(const std::vector<std::pair<double, OutcomeModel>>& parts) {
    OutcomeModel out;
    for (const auto& [w, m] : parts) {
      for (const auto& t : m.terms_) out.terms_.push_back({w * t.weight, t.term});
    }
    return out;
  }

  const std::vector<WeightedTerm>& terms() const noexcept { return terms_; }

  // Checks parameter lengths against n(g) and that every parameter is finite.
  void validate(const Graph& g) const {
    const std::size_t n = g.n();
    auto finite_all = [](const std::vector<double>& xs) {
      for (double x : xs) {
        if (!std::isfinite(x)) return false;
      }
      return true;
    };
    auto need = [&](bool ok, const std::string& what) {
      if (!ok) throw ValidationError("outcome model: " + what);
    };
    for (const auto& [w, term] : terms_) {
      need(std::isfinite(w), "non-finite term weight");
      std::visit(
          [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, model::OwnTreatment>) {
              need(std::isfinite(m.alpha) && std::isfinite(m.tau), "non-finite alpha/tau");
            } else if constexpr (std::is_same_v<M, model::OneTreatedNeighborIndicator>) {
              need(m.c.size() == n, "c has " + std::to_string(m.c.size()) + " entries, expected " +
                                        std::to_string(n));
              need(finite_all(m.c), "non-finite c");
            } else if constexpr (std::is_same_v<M, model::ConstantBaseline>) {
              need(m.b.size() == n, "b has " + std::to_string(m.b.size()) + " entries, expected " +
                                        std::to_string(n));
              need(finite_all(m.b), "non-finite b");
            } else if constexpr (std::is_same_v<M, model::ExposureResponse>) {
              need(m.values.size() == n, "exposure_response has " +
                                             std::to_string(m.values.size()) +
                                             " rows, expected " + std::to_string(n));
              for (const auto& row : m.values) {
                need(row.size() == m.cap + 1, "exposure_response row length must be cap+1");
                need(finite_all(row), "non-finite exposure_response value");
              }
            } else if constexpr (std::is_same_v<M, model::ExplicitTable>) {
              need(m.n == n, "explicit table has n=" + std::to_string(m.n) + ", graph has n=" +
                                 std::to_string(n));
              require_bitmask_size(n);
              need(m.values && m.values->size() == n * assignment_count(n),
                   "explicit table has the wrong number of entries");
              need(finite_all(*m.values), "non-finite explicit table entry");
            }
          },
          term);
    }
  }

  double evaluate(Unit i, Assignment z, const Graph& g) const {
    double y = 0.0;
    for (const auto& [w, term] : terms_) y += w * evaluate_term(term, i, z, g);
    return y;
  }

 private:
  static double evaluate_term(const model::Term& term, Unit i, Assignment z, const Graph& g) {
    return std::visit(
        [&](const auto& m) -> double {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, model::OwnTreatment>) {
            return m.alpha + (is_treated(z, i) ? m.tau : 0.0);
          } else if constexpr (std::is_same_v<M, model::TreatedNeighborCount>) {
            return static_cast<double>(g.treated_neighbors(i, z));
          } else if constexpr (std::is_same_v<M, model::OneTreatedNeighborIndicator>) {
            return g.treated_neighbors(i, z) == 1 ? m.c[i] : 0.0;
          } else if constexpr (std::is_same_v<M, model::ConstantBaseline>) {
            return m.b[i];
          } else if constexpr (std::is_same_v<M, model::ExposureResponse>) {
            const std::size_t k = g.treated_neighbors(i, z);
            return m.values[i][k < m.cap ? k : m.cap];
          } else {
            return (*m.values)[z * m.n + i];
          }
        },
        term);
  }

  std::vector<WeightedTerm> terms_;
};

// The n x 2^n table of potential outcomes, either materialized or evaluated
// lazily from an outcome model. Both forms are immutable and deterministic.
class ScienceTable {
 public:
  ScienceTable() = default;

  // values is column-major: entry (i, z) at z * n + i.
  static ScienceTable from_values(std::size_t n, std::vector<double> values) {
    require_bitmask_size(n);
    if (values.size() != n * assignment_count(n)) {
      throw ValidationError("science table: expected " +
                            std::to_string(n * assignment_count(n)) + " entries, got " +
                            std::to_string(values.size()));
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw ValidationError("science table: non-finite outcome");
    }
    ScienceTable t;
    t.n_ = n;
    t.values_ = std::make_shared<const std::vector<double>>(std::move(values));
    return t;
  }

  static ScienceTable lazy(OutcomeModel model, Graph g) {
    require_bitmask_size(g.n());
    model.validate(g);
    ScienceTable t;
    t.n_ = g.n();
    t.model_ = std::make_shared<const OutcomeModel>(std::move(model));
    t.graph_ = std::make_shared<const Graph>(std::move(g));
    return t;
  }

  std::size_t n() const noexcept { return n_; }
  bool materialized() const noexcept { return values_ != nullptr; }

  double operator()(Unit i, Assignment z) const {
    if (i >= n_) {
      throw ValidationError("unit index " + std::to_string(i) + " out of range for n=" +
                            std::to_string(n_));
    }
    if ((z & ~all_units(n_)) != 0) {
      throw ValidationError("assignment has bits beyond n=" + std::to_string(n_));
    }
    return at(i, z);
  }

  // Unchecked access for hot loops.
  double at(Unit i, Assignment z) const {
    if (values_) return (*values_)[z * n_ + i];
    return model_->evaluate(i, z, *graph_);
  }

  void column(Assignment z, std::span<double> out) const {
    if (values_) {
      const double* base = values_->data() + z * n_;
      for (Unit i = 0; i < n_; ++i) out[i] = base[i];
    } else {
      for (Unit i = 0; i < n_; ++i) out[i] = model_->evaluate(i, z, *graph_);
    }
  }

 private:
  std::size_t n_ = 0;
  std::shared_ptr<const std::vector<double>> values_;
  std::shared_ptr<const OutcomeModel> model_;
  std::shared_ptr<const Graph> graph_;
};

inline ScienceTable tabulate(const OutcomeModel& m, const Graph& g,
                             std::size_t cap = kDefaultEnumerationCap) {
  require_enumerable(g.n(), cap);
  m.validate(g);
  const std::size_t n = g.n();
  const std::uint64_t cols = assignment_count(n);
  std::vector<double> values(n * cols);
  for (Assignment z = 0; z < cols; ++z) {
    for (Unit i = 0; i < n; ++i) values[z * n + i] = m.evaluate(i, z, g);
  }
  return ScienceTable::from_values(n, std::move(values));
}

inline double evaluate(const ScienceTable& t, Unit i, Assignment z) { return t(i, z); }

// Table with i.i.d. entries uniform on [lo, hi).
inline ScienceTable random_table(std::size_t n, Rng& rng, double lo = 0.0, double hi = 1.0) {
  require_enumerable(n, kDefaultEnumerationCap);
  std::vector<double> values(n * assignment_count(n));
  for (double& v : values) v = lo + (hi - lo) * uniform01(rng);
  return ScienceTable::from_values(n, std::move(values));
}

// CSV: header row of assignment bitmasks (bit i = unit i+1 treated), then one row per unit.
// Columns may appear in any order; every mask in [0, 2^n) must appear exactly once.
inline ScienceTable read_table_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      auto b = cell.find_first_not_of(" \t\r");
      auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("table csv: missing header row");
  const auto header = split(line);
  std::vector<Assignment> masks;
  masks.reserve(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    try {
      std::size_t used = 0;
      const unsigned long long m = std::stoull(header[c], &used);
      if (used != header[c].size()) throw std::invalid_argument("trailing");
      masks.push_back(m);
    } catch (const std::exception&) {
      throw ValidationError("table csv header column " + std::to_string(c + 1) +
                            ": not an assignment bitmask: '" + header[c] + "'");
    }
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != masks.size()) {
      throw ValidationError("table csv line " + std::to_string(line_no) + ": expected " +
                            std::to_string(masks.size()) + " values, got " +
                            std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ValidationError("table csv line " + std::to_string(line_no) + ": bad value '" +
                              cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size();
  require_bitmask_size(n);
  const std::uint64_t cols = assignment_count(n);
  if (masks.size() != cols) {
    throw ValidationError("table csv: " + std::to_string(n) + " units need " +
                          std::to_string(cols) + " columns, got " + std::to_string(masks.size()));
  }
  std::vector<double> values(n * cols);
  std::vector<bool> seen(cols, false);
  for (std::size_t c = 0; c < masks.size(); ++c) {
    const Assignment z = masks[c];
    if (z >= cols || seen[z]) {
      throw ValidationError("table csv header: mask " + std::to_string(z) +
                            " is out of range or repeated");
    }
    seen[z] = true;
    for (Unit i = 0; i < n; ++i) values[z * n + i] = rows[i][c];
  }
  return ScienceTable::from_values(n, std::move(values));
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_table_csv(std::ostream& out, const ScienceTable& t) {
  const std::size_t n = t.n();
  const std::uint64_t cols = assignment_count(n);
  for (Assignment z = 0; z < cols; ++z) out << (z ? "," : "") << z;
  out << '\n';
  for (Unit i = 0; i < n; ++i) {
    for (Assignment z = 0; z < cols; ++z) out << (z ? "," : "") << format_double(t.at(i, z));
    out << '\n';
  }
}

}  // namespace netpol
