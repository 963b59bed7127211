#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "netpol/cli/commands.hpp"

using namespace netpol;
using namespace netpol::cli;
namespace fs = std::filesystem;

namespace {

Scenario scenario(const std::string& text) { return parse_scenario(Json::parse(text), "."); }

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') {
        quoted = !quoted;
      } else if (c == ',' && !quoted) {
        row.push_back(cell);
        cell.clear();
      } else {
        cell += c;
      }
    }
    row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

const char* kCr1 = R"({
  "graph": {"type": "biclique", "u": 2, "v": 3},
  "model": {"family": "treated_neighbor_count"},
  "policy": {"family": "completely_randomized", "m": 1},
  "estimands": [{"name": "efao_contrast", "focal": "treated", "focal2": "untreated"}, "avg_direct_effect"]
})";

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("netpol_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NETPOL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Eval, CompletelyRandomizedContrastAndDirectEffect) {
  const auto out = run_eval(scenario(kCr1));
  const auto rows = read_csv(out.files.at("results.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"estimand", "policy", "value", "std_error", "method",
                                                "event_probability", "n_samples"}));
  EXPECT_EQ(rows[1][0], "efao_contrast(treated,untreated)");
  EXPECT_EQ(rows[2][0], "avg_direct_effect");
  EXPECT_NEAR(std::stod(rows[1][2]), -0.6, 1e-12);
  EXPECT_NEAR(std::stod(rows[2][2]), -0.6, 1e-12);
  EXPECT_EQ(rows[1][4], "exact");
}

TEST(Eval, OwnTreatmentEao) {
  const auto out = run_eval(scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "model": {"family": "own_treatment", "tau": 1},
    "policy": {"family": "homogeneous_bernoulli", "p": 0.4},
    "estimands": ["eao"]})"));
  EXPECT_NEAR(std::stod(read_csv(out.files.at("results.csv"))[1][2]), 0.4, 1e-12);
}

TEST(Eval, RoundTripEqualsLibraryValues) {
  const Scenario s = scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "model": {"family": "linear_combination", "terms": [
      {"weight": 0.7, "model": {"family": "treated_neighbor_count"}},
      {"weight": 1.3, "model": {"family": "own_treatment", "alpha": 0.1, "tau": 2}}]},
    "policy": {"family": "heterogeneous_bernoulli", "p_by_degree": {"2": 0.35, "3": 0.6}},
    "estimands": ["eao", {"name": "efao", "focal": "neighbor_union"}, "eate", "avg_direct_effect"],
    "engine": {"mode": "mc", "n_samples": 5000, "seed": 9}})");
  const auto rows = read_csv(run_eval(s).files.at("results.csv"));
  const auto table = tabulate(*s.model, *s.graph);
  const Engine engine(s.engine);
  const auto& pi = s.policies.front();
  const std::vector<EstimandResult> expected{
      eao(pi, table, engine),
      efao(pi, table, FocalMapping::neighbor_union(NeighborhoodStructure::from_graph(*s.graph)), engine),
      eate(table, pi, engine), avg_direct_effect(pi, table, engine)};
  ASSERT_EQ(rows.size(), expected.size() + 1);
  for (std::size_t k = 0; k < expected.size(); ++k) {
    EXPECT_EQ(std::stod(rows[k + 1][2]), expected[k].value);
    EXPECT_EQ(std::stod(rows[k + 1][3]), expected[k].std_error);
    EXPECT_EQ(rows[k + 1][4], "monte_carlo");
    EXPECT_EQ(std::stoull(rows[k + 1][6]), 5000u);
  }
  EXPECT_EQ(pi.marginal(0), 0.6);
  EXPECT_EQ(pi.marginal(4), 0.35);
}

TEST(Eval, PolicyFreeEstimandsAndDecomposition) {
  const auto rows = read_csv(run_eval(scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "model": {"family": "treated_neighbor_count"},
    "estimands": ["gate", {"name": "eao_decomposition", "m": 1}]})"))
                                 .files.at("results.csv"));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_NEAR(std::stod(rows[1][2]), 2.4, 1e-12);
  EXPECT_EQ(rows[2][0], "eao_decomposition(1).delta");
  EXPECT_NEAR(std::stod(rows[4][2]), 0.48, 1e-12);
}

TEST(Eval, ZeroProbabilityEventSurfaces) {
  EXPECT_THROW(run_eval(scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "model": {"family": "own_treatment"},
    "policy": {"family": "completely_randomized", "m": 0},
    "estimands": [{"name": "efao", "focal": "treated"}]})")),
               ZeroProbabilityEvent);
}

TEST(Scenario, ValidationErrorsNameTheField) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {R"({"graph": {"type": "biclique", "u": 2, "v": 3}, "policy": {"family": "bernoulli", "p": 0.5}})",
       "policy.family"},
      {R"({"graph": {"type": "biclique", "u": 2, "v": 3}, "extra": 1})", "extra"},
      {R"({"graph": {"type": "biclique", "u": 2, "v": 3, "w": 1}})", "graph.w"},
      {R"({"graph": {"type": "biclique", "u": 2, "v": 3}, "policy": {"family": "homogeneous_bernoulli", "p": 2}})",
       "policy.p"},
      {R"({"graph": {"type": "biclique", "u": 2, "v": 3}, "model": {"family": "constant_baseline", "b": [1, 2]}})",
       "model.b"},
      {R"({"graph": {"type": "biclique", "u": 2, "v": 3}, "model": {"family": "one_treated_neighbor_indicator", "c_by_degree": {"4": 1}}})",
       "model.c_by_degree"},
      {R"({"graph": {"type": "biclique", "u": 2, "v": 3}, "estimands": [{"name": "eaoo"}]})", "estimands[0].name"},
      {R"({"graph": {"type": "biclique", "u": 2, "v": 3}, "estimands": [{"name": "avg_po_by_exposure", "level": 1}]})",
       "exposure"},
      {R"({"graph": {"type": "biclique", "u": 2, "v": 3}, "exposure": {"family": "own_treatment"},
          "estimands": [{"name": "avg_po_by_exposure", "level": 4}]})",
       "estimands[0]"},
      {R"({"graph": {"type": "biclique", "u": 2, "v": 3}, "neighborhoods": {"type": "unique_pairs", "targets": [1, 3, 2, 5, 4]}})",
       "neighborhoods.targets"},
      {R"({"policy": {"family": "homogeneous_bernoulli", "p": 0.5}})", "policy"},
      {R"({"engine": {"mode": "fast"}})", "engine.mode"},
      {R"({"graph": {"type": "edges", "n": 3, "edges": [[1, 1]]}})", ""},
  };
  for (const auto& [text, field] : cases) {
    try {
      scenario(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  }
}

TEST(Scenario, ScalarCoefficientBroadcasts) {
  const auto rows = read_csv(run_eval(scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "model": {"family": "constant_baseline", "b": 2.5},
    "policy": {"family": "heterogeneous_bernoulli", "p": 0.25},
    "estimands": ["eao"]})"))
                                 .files.at("results.csv"));
  EXPECT_EQ(std::stod(rows[1][2]), 2.5);
}

TEST(Scenario, PolicyGridsAndConditioning) {
  const Scenario s = scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "policies": [
      {"family": "homogeneous_bernoulli", "p_grid": [0.1, 0.2]},
      {"family": "completely_randomized", "m_grid": [1, 2, 3]},
      {"family": "all_or_none"},
      {"family": "conditioned", "base": {"family": "completely_randomized", "m": 2}, "fixed": {"1": 1, "5": 0}}
    ]})");
  ASSERT_EQ(s.policies.size(), 7u);
  EXPECT_EQ(s.policies[2].describe(), "completely_randomized(m=1)");
  EXPECT_DOUBLE_EQ(s.policies[5].parameter(), 0.5);
  const auto& cond = s.policies[6];
  EXPECT_EQ(cond.family_name(), "conditioned");
  EXPECT_DOUBLE_EQ(cond.pmf(0b00011), 1.0 / 3.0);
  EXPECT_EQ(cond.pmf(0b10001), 0.0);
}

TEST(Scenario, EdgeListAndExplicitTableFiles) {
  const auto dir = temp_dir("files");
  {
    std::ofstream(dir / "g.txt") << "# path\n1 2\n2 3\n";
    std::ofstream t(dir / "t.csv");
    Rng rng = make_rng(3, 0);
    write_table_csv(t, random_table(3, rng));
  }
  std::ofstream(dir / "s.json") << R"({
    "graph": {"type": "edge_list", "path": "g.txt"},
    "model": {"family": "explicit_table", "path": "t.csv"},
    "policy": {"family": "completely_randomized", "m": 1},
    "estimands": ["avg_direct_effect", {"name": "efao_contrast"}]})";
  const Scenario s = load_scenario(dir / "s.json");
  EXPECT_EQ(s.graph->n(), 3u);
  const auto rows = read_csv(run_eval(s).files.at("results.csv"));
  EXPECT_NEAR(std::stod(rows[1][2]), std::stod(rows[2][2]), 1e-12);
}

TEST(Scenario, CopiesOfAGraph) {
  const Scenario s = scenario(R"({"graph": {"type": "biclique", "u": 1, "v": 1, "copies": 3}})");
  EXPECT_EQ(s.graph->n(), 6u);
  EXPECT_EQ(s.graph->component_count(), 3u);
}

TEST(Equiv, CompletelyRandomizedRandomTables) {
  const auto out = run_equiv(scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "policy": {"family": "completely_randomized", "m": 2},
    "equiv": {"random_tables": 20, "table_seed": 3}})"));
  const auto j = Json::parse(out.files.at("equivalence.json"));
  ASSERT_EQ(j["reports"].size(), 20u);
  for (const auto& r : j["reports"]) {
    EXPECT_EQ(r["verdict"], "equal");
    for (const auto& p : r["pairs"]) EXPECT_LT(p["residual"].get<double>(), 1e-9);
  }
}

TEST(Equiv, BernoulliAsymptoticAndBaselineNotEqual) {
  const auto a = Json::parse(run_equiv(scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "model": {"family": "treated_neighbor_count"},
    "policy": {"family": "homogeneous_bernoulli", "p": 0.3}})"))
                                 .files.at("equivalence.json"));
  const auto& rep = a["reports"][0];
  EXPECT_EQ(rep["verdict"], "asymptotic");
  ASSERT_EQ(rep["copy_series"].size(), 4u);
  for (std::size_t k = 1; k < 4; ++k) {
    EXPECT_LT(rep["copy_series"][k]["residual"].get<double>(), rep["copy_series"][k - 1]["residual"].get<double>());
  }
  const auto b = Json::parse(run_equiv(scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "model": {"family": "constant_baseline", "b_by_label": {"left": 5}},
    "policy": {"family": "heterogeneous_bernoulli", "p_by_label": {"left": 0.8, "right": 0.2}}})"))
                                 .files.at("equivalence.json"));
  EXPECT_EQ(b["reports"][0]["verdict"], "not-equal");
}

TEST(Biclique, DefaultGridLevelZeroCurve) {
  const auto out = run_biclique(BicliqueSettings{}, EngineOptions{});
  const auto rows = read_csv(out.files.at("matching_curves.csv"));
  EXPECT_EQ(rows[0], (std::vector<std::string>{"level", "p_class_a", "p_class_b", "branch", "residual"}));
  std::size_t level0 = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k][0] != "0") continue;
    ++level0;
    const double x = std::stod(rows[k][1]);
    EXPECT_NEAR(std::stod(rows[k][2]), 1.0 - std::pow(1.0 - x, 1.5), 1e-9);
  }
  EXPECT_EQ(level0, 101u);
  EXPECT_TRUE(out.files.count("matching_curves_transposed.csv"));
  const auto summary = Json::parse(out.files.at("biclique_summary.json"));
  EXPECT_GT(summary["joint_residual"]["min_residual"].get<double>(), 0.0);
  EXPECT_TRUE(out.files.count("closed_form.csv"));
}

TEST(Biclique, EqualHalvesCollapseToDiagonal) {
  BicliqueSettings b;
  b.u = 2;
  b.v = 2;
  b.grid = 10;
  const auto rows = read_csv(run_biclique(b, EngineOptions{}).files.at("matching_curves.csv"));
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k][0] == "1") continue;  // level 1 is symmetric in p and 1 - p, so it has a mirrored branch
    EXPECT_NEAR(std::stod(rows[k][1]), std::stod(rows[k][2]), 1e-9);
  }
}

TEST(Biclique, WrongOrientationRejected) {
  BicliqueSettings b;
  b.u = 3;
  b.v = 2;
  try {
    run_biclique(b, EngineOptions{});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("swap"), std::string::npos);
  }
}

TEST(Decide, DegreeTargetedSettings) {
  const auto out = run_decide(scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "models": [
      {"name": "A", "model": {"family": "one_treated_neighbor_indicator", "c_by_degree": {"3": 3}}},
      {"name": "B", "model": {"family": "one_treated_neighbor_indicator", "c_by_degree": {"2": 2}}}],
    "exposure": {"family": "neighbor_count_capped", "cap": 2},
    "policies": [{"family": "homogeneous_bernoulli", "p_grid": [0.3333333333333333, 0.5]}]})"));
  const auto rows = read_csv(out.files.at("decision.csv"));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[1][4], "1");  // A picks 1/3
  EXPECT_EQ(rows[2][4], "0");
  EXPECT_EQ(rows[3][4], "0");
  EXPECT_EQ(rows[4][4], "1");  // B picks 1/2
  EXPECT_NEAR(std::stod(rows[1][3]), 8.0 / 15.0, 1e-9);
  EXPECT_NEAR(std::stod(rows[2][3]), 0.45, 1e-9);
  EXPECT_NEAR(std::stod(rows[4][3]), 0.6, 1e-9);
  const auto expo = read_csv(out.files.at("exposure_averages.csv"));
  ASSERT_EQ(expo.size(), 7u);
  for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(expo[1 + d][2], expo[4 + d][2]);
}

TEST(Decide, SingletonAndTieBreak) {
  const auto rows = read_csv(run_decide(scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "model": {"family": "constant_baseline", "b": [1, 2, 3, 4, 5]},
    "policies": [{"family": "homogeneous_bernoulli", "p_grid": [0.6, 0.2, 0.4]}]})"))
                                 .files.at("decision.csv"));
  EXPECT_EQ(rows[2][4], "1");
  EXPECT_EQ(rows[1][3], rows[3][3]);
  const auto single = read_csv(run_decide(scenario(R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "model": {"family": "treated_neighbor_count"},
    "policy": {"family": "homogeneous_bernoulli", "p": 0.1}})"))
                                   .files.at("decision.csv"));
  EXPECT_EQ(single[1][4], "1");
}

TEST(Binary, ExitCodesAndNoPartialFiles) {
  const auto dir = temp_dir("binary");
  std::ofstream(dir / "bad_family.json")
      << R"({"graph": {"type": "biclique", "u": 2, "v": 3}, "model": {"family": "treated_neighbor_count"},
            "policy": {"family": "bernoulli", "p": 0.5}, "estimands": ["eao"]})";
  std::ofstream(dir / "zero_event.json")
      << R"({"graph": {"type": "biclique", "u": 2, "v": 3}, "model": {"family": "own_treatment"},
            "policy": {"family": "completely_randomized", "m": 0},
            "estimands": ["eao", {"name": "efao", "focal": "treated"}]})";
  std::ofstream(dir / "syntax.json") << "{\"graph\": {\n \"type\": \"biclique\",, }}";
  std::ofstream(dir / "good.json") << kCr1;

  EXPECT_EQ(run_cli("eval " + (dir / "bad_family.json").string() + " --out " + (dir / "o1").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "o1"));
  EXPECT_EQ(run_cli("eval " + (dir / "zero_event.json").string() + " --out " + (dir / "o2").string()), 3);
  EXPECT_FALSE(fs::exists(dir / "o2"));
  EXPECT_EQ(run_cli("eval " + (dir / "syntax.json").string() + " --out " + (dir / "o3").string()), 2);
  EXPECT_EQ(run_cli("eval " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("biclique --u 3 --v 2 --out " + (dir / "o4").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "o4"));
  EXPECT_EQ(run_cli("eval " + (dir / "good.json").string() + " --mode sometimes"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("eval " + (dir / "good.json").string() + " --out " + (dir / "o5").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o5" / "results.csv"));
}

TEST(Binary, FlagsOverrideConfigAndOutputsAreByteIdentical) {
  const auto dir = temp_dir("repro");
  std::ofstream(dir / "s.json") << R"({
    "graph": {"type": "biclique", "u": 2, "v": 3},
    "model": {"family": "treated_neighbor_count"},
    "policy": {"family": "homogeneous_bernoulli", "p": 0.5},
    "estimands": ["eao", {"name": "efao_contrast"}],
    "engine": {"mode": "exact", "seed": 1},
    "output": {"dir": "never_used"}})";
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::string common = "eval " + (dir / "s.json").string() + " --mode mc --samples 20000 --seed 77 --out ";
  ASSERT_EQ(run_cli(common + (dir / "a").string()), 0);
  ASSERT_EQ(run_cli(common + (dir / "b").string() + " --threads 3"), 0);
  const auto a = slurp(dir / "a" / "results.csv");
  EXPECT_EQ(a, slurp(dir / "b" / "results.csv"));
  EXPECT_NE(a.find("monte_carlo"), std::string::npos);
  EXPECT_NE(a.find(",20000\n"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "never_used"));
  ASSERT_EQ(run_cli("eval " + (dir / "s.json").string() + " --mode mc --samples 20000 --seed 78 --out " +
                    (dir / "c").string()),
            0);
  EXPECT_NE(a, slurp(dir / "c" / "results.csv"));
}
