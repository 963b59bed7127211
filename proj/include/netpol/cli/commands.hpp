#pragma once

// Subcommand runners. Each builds every output file in memory; write_outputs
// then commits them, so a failing run leaves nothing behind.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "netpol/cli/scenario.hpp"
#include "netpol/netpol.hpp"

namespace netpol::cli {

struct Outputs {
  std::map<std::string, std::string> files;  // file name -> contents
  std::string summary;                       // printed to stdout
};

inline void write_outputs(const Outputs& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& [name, contents] : out.files) {
    const auto path = dir / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot write " + path.string());
    f << contents;
  }
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline ScienceTable build_table(const OutcomeModel& m, const Graph& g, const EngineOptions& opts) {
  m.validate(g);
  if (g.n() <= opts.cap) return tabulate(m, g, opts.cap);
  return ScienceTable::lazy(m, g);
}

inline FocalMapping build_focal(const FocalSpec& f, const Scenario& s) {
  auto ns = [&] {
    return s.neighborhoods ? *s.neighborhoods : NeighborhoodStructure::from_graph(*s.graph);
  };
  if (f.variant == "treated") return FocalMapping::treated();
  if (f.variant == "untreated") return FocalMapping::untreated();
  if (f.variant == "full_population") return FocalMapping::full_population();
  if (f.variant == "neighbor_union") return FocalMapping::neighbor_union(ns());
  if (f.variant == "non_neighbor_intersection") return FocalMapping::non_neighbor_intersection(ns());
  if (f.variant == "by_exposure") return FocalMapping::by_exposure(*s.exposure, *s.graph, f.level);
  throw ValidationError("unknown focal variant '" + f.variant + "'");
}

struct ResultRow {
  std::string estimand;
  std::string policy;
  EstimandResult result;
};

inline std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "estimand,policy,value,std_error,method,event_probability,n_samples\n";
  for (const auto& r : rows) {
    os << csv_field(r.estimand) << ',' << csv_field(r.policy) << ','
       << format_double(r.result.value) << ',' << format_double(r.result.std_error) << ','
       << method_name(r.result.method) << ',' << format_double(r.result.event_probability) << ','
       << r.result.n_samples << '\n';
  }
  return os.str();
}

inline std::string estimand_label(const EstimandRequest& e) {
  if (!e.label.empty()) return e.label;
  auto focal = [](const FocalSpec& f) {
    return f.variant == "by_exposure" ? "by_exposure[" + std::to_string(f.level) + "]" : f.variant;
  };
  if (e.name == "efao") return "efao(" + focal(e.focal) + ")";
  if (e.name == "efao_contrast") return "efao_contrast(" + focal(e.focal) + "," + focal(e.focal2) + ")";
  if (e.name == "avg_po_by_exposure") return "avg_po_by_exposure(" + std::to_string(e.level) + ")";
  if (e.name == "eao_decomposition") return "eao_decomposition(" + std::to_string(e.m) + ")";
  return e.name;
}

inline Outputs run_eval(const Scenario& s) {
  if (!s.graph) throw ValidationError("field 'graph': required by eval");
  if (!s.model) throw ValidationError("field 'model': required by eval");
  if (s.estimands.empty()) throw ValidationError("field 'estimands': required by eval");
  const Graph& g = *s.graph;
  const ScienceTable table = build_table(*s.model, g, s.engine);
  const Engine engine(s.engine);

  bool needs_policy = false;
  for (const auto& e : s.estimands) {
    if (e.name != "gate" && e.name != "avg_po_by_exposure" && e.name != "eao_decomposition") {
      needs_policy = true;
    }
  }
  if (needs_policy && s.policies.empty()) throw ValidationError("field 'policy': required by eval");

  std::vector<ResultRow> rows;
  auto exact_value = [&](double v) {
    EstimandResult r;
    r.value = v;
    r.method = Method::exact;
    return r;
  };
  for (const auto& e : s.estimands) {
    const std::string label = estimand_label(e);
    if (e.name == "gate") {
      rows.push_back({label, "", exact_value(gate(table))});
      continue;
    }
    if (e.name == "avg_po_by_exposure") {
      rows.push_back({label, "",
                      exact_value(avg_po_by_exposure(table, *s.exposure, g, e.level,
                                                     s.exposure_tolerance, s.engine.cap))});
      continue;
    }
    if (e.name == "eao_decomposition") {
      const auto d = eao_decomposition(table, e.m, s.engine);
      rows.push_back({label + ".delta", "", exact_value(d.delta)});
      rows.push_back({label + ".direct", "", exact_value(d.direct)});
      rows.push_back({label + ".spillover", "", exact_value(d.spillover)});
      continue;
    }
    for (const auto& pi : s.policies) {
      EstimandResult r;
      if (e.name == "eao") {
        r = eao(pi, table, engine);
      } else if (e.name == "efao") {
        r = efao(pi, table, build_focal(e.focal, s), engine);
      } else if (e.name == "efao_contrast") {
        r = efao_contrast(pi, table, build_focal(e.focal, s), build_focal(e.focal2, s), engine);
      } else if (e.name == "avg_direct_effect") {
        r = avg_direct_effect(pi, table, engine);
      } else if (e.name == "avg_indirect_effect") {
        r = avg_indirect_effect(
            pi, table, s.neighborhoods ? *s.neighborhoods : NeighborhoodStructure::from_graph(g),
            engine);
      } else if (e.name == "eate") {
        r = eate(table, pi, engine);
      } else if (e.name == "welfare") {
        std::vector<WelfareComponent> comps;
        for (const auto& [f, w] : e.components) comps.push_back({build_focal(f, s), w});
        r = welfare(pi, table, comps, engine);
      } else {
        throw ValidationError("unknown estimand '" + e.name + "'");
      }
      rows.push_back({label, pi.describe(), r});
    }
  }
  Outputs out;
  out.files["results.csv"] = results_csv(rows);
  std::ostringstream sum;
  for (const auto& r : rows) {
    sum << r.estimand << (r.policy.empty() ? "" : " [" + r.policy + "]") << " = "
        << format_double(r.result.value);
    if (r.result.method == Method::monte_carlo) sum << " +/- " << format_double(r.result.std_error);
    sum << '\n';
  }
  out.summary = sum.str();
  return out;
}

inline Json report_json(const EquivalenceReport& rep, const std::string& table_name) {
  Json j;
  j["scenario"] = rep.scenario;
  j["table"] = table_name;
  j["verdict"] = verdict_name(rep.verdict);
  j["primary"] = rep.primary;
  j["pairs"] = Json::array();
  for (const auto& p : rep.pairs) {
    j["pairs"].push_back({{"left_name", p.left_name},
                          {"left", p.left},
                          {"right_name", p.right_name},
                          {"right", p.right},
                          {"residual", p.residual}});
  }
  j["copy_series"] = Json::array();
  for (const auto& c : rep.copy_series) {
    j["copy_series"].push_back({{"copies", c.copies},
                                {"contrast", c.contrast},
                                {"reference", c.reference},
                                {"residual", c.residual}});
  }
  return j;
}

inline Outputs run_equiv(const Scenario& s) {
  if (!s.graph) throw ValidationError("field 'graph': required by equiv");
  if (s.policies.empty()) throw ValidationError("field 'policy': required by equiv");
  if (!s.model && s.equiv.random_tables == 0) {
    throw ValidationError("field 'model': required by equiv unless equiv.random_tables > 0");
  }
  const Graph& g = *s.graph;
  require_enumerable(g.n(), s.engine.cap);
  std::vector<std::pair<std::string, ScienceTable>> tables;
  if (s.model) tables.emplace_back("model", tabulate(*s.model, g, s.engine.cap));
  for (std::size_t t = 0; t < s.equiv.random_tables; ++t) {
    Rng rng = make_rng(s.equiv.table_seed, t);
    tables.emplace_back("random_table[" + std::to_string(t) + "]", random_table(g.n(), rng));
  }
  Json reports = Json::array();
  std::ostringstream sum;
  for (const auto& pi : s.policies) {
    for (const auto& [name, table] : tables) {
      const auto rep = equivalence_report(table, g, pi, s.equiv.copies, s.engine);
      reports.push_back(report_json(rep, name));
      sum << verdict_name(rep.verdict) << ": " << name << ", " << rep.scenario << " (residual "
          << format_double(rep.pairs[rep.primary].residual) << ")\n";
    }
  }
  Outputs out;
  out.files["equivalence.json"] = Json{{"reports", reports}}.dump(2) + "\n";
  out.summary = sum.str();
  return out;
}

inline std::vector<double> default_left_outcomes(std::size_t u) {
  std::vector<double> y(u + 1);
  for (std::size_t d = 0; d <= u; ++d) y[d] = 1.0 + static_cast<double>(d);
  return y;
}

inline std::vector<double> default_right_outcomes(std::size_t u) {
  std::vector<double> y(u + 1);
  for (std::size_t d = 0; d <= u; ++d) y[d] = 1.0 + static_cast<double>(u - d);
  return y;
}

inline Outputs run_biclique(const BicliqueSettings& b, const EngineOptions& opts) {
  namespace ba = biclique_analysis;
  ba::BicliqueSpec spec{b.u, b.v, b.y_left.value_or(default_left_outcomes(b.u)),
                        b.y_right.value_or(default_right_outcomes(b.u))};
  spec.validate();
  if (b.grid == 0) throw ValidationError("field 'biclique.grid': must be >= 1");
  for (double p : b.p_values) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("field 'biclique.p_values': each p must lie in (0, 1)");
  }
  for (std::size_t k : b.copies) {
    if (k == 0) throw ValidationError("field 'biclique.copies': copy counts must be >= 1");
  }

  Outputs out;
  Json summary;
  summary["u"] = b.u;
  summary["v"] = b.v;
  summary["grid"] = b.grid;
  const std::pair<ba::Axis, std::string> orientations[] = {
      {ba::Axis::low_degree_class, "matching_curves.csv"},
      {ba::Axis::high_degree_class, "matching_curves_transposed.csv"}};
  for (const auto& [axis, file] : orientations) {
    std::ostringstream os;
    os << "level,p_class_a,p_class_b,branch,residual\n";
    Json unmatched = Json::object();
    for (std::size_t d = 0; d <= b.u; ++d) {
      const auto curve = ba::exposure_matching_curve(b.u, b.v, d, b.grid, axis);
      for (const auto& pt : curve.points) {
        os << pt.level << ',' << format_double(pt.a) << ',' << format_double(pt.b) << ','
           << pt.branch << ',' << format_double(pt.residual) << '\n';
      }
      unmatched[std::to_string(d)] = curve.unmatched;
    }
    out.files[file] = os.str();
    summary[axis == ba::Axis::low_degree_class ? "unmatched" : "unmatched_transposed"] = unmatched;
  }
  const auto joint = ba::joint_matching_residual(b.u, b.v, b.step, b.margin);
  summary["joint_residual"] = {{"min_residual", joint.min_residual},
                               {"p_class_a", joint.a},
                               {"p_class_b", joint.b},
                               {"step", b.step},
                               {"margin", b.margin}};
  out.files["biclique_summary.json"] = summary.dump(2) + "\n";

  const Graph component = biclique(b.u, b.v);
  const ScienceTable table = tabulate(spec.outcome_model(), component, opts.cap);
  const ExposureMap map = ExposureMap::neighbor_count_capped(b.u);
  std::ostringstream cf;
  cf << "level,p,copies,exact_efao,closed_form_limit,abs_gap,avg_po_exact,avg_po_closed_form,"
        "limit_difference_sign\n";
  for (std::size_t d = 0; d <= b.u; ++d) {
    const double po_exact = avg_po_by_exposure(table, map, component, d, 0.0, opts.cap);
    const double po_closed = ba::avg_po_closed_form(spec, d);
    std::vector<Assignment> focal_of(assignment_count(component.n()));
    for (Assignment z = 0; z < focal_of.size(); ++z) {
      Assignment f = 0;
      for (Unit i = 0; i < component.n(); ++i) {
        if (map.level(component, i, z) == d) f = with_unit(f, i);
      }
      focal_of[z] = f;
    }
    for (double p : b.p_values) {
      const Policy pi = Policy::homogeneous_bernoulli(component.n(), p);
      const double limit = ba::efao_by_exposure_closed_form(spec, d, p);
      const int sign = ba::difference_sign(spec, d, p);
      for (std::size_t k : b.copies) {
        const CopiesFactorization fact(table, pi, k, opts.cap);
        const double exact =
            fact.focal_average([&](Assignment z) { return focal_of[z]; },
                               "some unit at exposure level " + std::to_string(d))
                .value;
        cf << d << ',' << format_double(p) << ',' << k << ',' << format_double(exact) << ','
           << format_double(limit) << ',' << format_double(std::abs(exact - limit)) << ','
           << format_double(po_exact) << ',' << format_double(po_closed) << ',' << sign << '\n';
      }
    }
  }
  out.files["closed_form.csv"] = cf.str();

  std::ostringstream sum;
  sum << "K_{" << b.u << "," << b.v << "}: joint matching residual "
      << format_double(joint.min_residual) << " at (" << format_double(joint.a) << ", "
      << format_double(joint.b) << ")\n";
  out.summary = sum.str();
  return out;
}

inline Outputs run_decide(const Scenario& s) {
  if (!s.graph) throw ValidationError("field 'graph': required by decide");
  if (s.policies.empty()) throw ValidationError("field 'policies': required by decide");
  std::vector<NamedModel> models = s.models;
  if (s.model) models.insert(models.begin(), NamedModel{"model", *s.model});
  if (models.empty()) throw ValidationError("field 'models': required by decide");
  const Graph& g = *s.graph;
  const Engine engine(s.engine);

  std::ostringstream dec;
  dec << "table,policy,parameter,eao,selected\n";
  std::ostringstream expo;
  expo << "table,level,avg_po\n";
  std::ostringstream sum;
  for (const auto& nm : models) {
    const ScienceTable table = build_table(nm.model, g, s.engine);
    const auto choice = choose_policy(s.policies, table, engine);
    for (std::size_t k = 0; k < s.policies.size(); ++k) {
      dec << csv_field(nm.name) << ',' << csv_field(s.policies[k].describe()) << ','
          << format_double(s.policies[k].parameter()) << ',' << format_double(choice.eao[k]) << ','
          << (k == choice.selected ? 1 : 0) << '\n';
    }
    sum << nm.name << ": selects " << s.policies[choice.selected].describe() << " (eao "
        << format_double(choice.eao[choice.selected]) << ")\n";
    if (s.exposure) {
      for (std::size_t d = 0; d < s.exposure->level_count(); ++d) {
        const double v =
            avg_po_by_exposure(table, *s.exposure, g, d, s.exposure_tolerance, s.engine.cap);
        expo << csv_field(nm.name) << ',' << d << ',' << format_double(v) << '\n';
      }
    }
  }
  Outputs out;
  out.files["decision.csv"] = dec.str();
  if (s.exposure) out.files["exposure_averages.csv"] = expo.str();
  out.summary = sum.str();
  return out;
}

}  // namespace netpol::cli
