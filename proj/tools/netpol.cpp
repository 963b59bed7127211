#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "netpol/cli/commands.hpp"

namespace {

struct Overrides {
  std::string mode;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> cap;
  std::optional<std::size_t> threads;
  std::string out;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--mode", o.mode, "exact or mc")->check(CLI::IsMember({"exact", "mc"}));
  sub->add_option("--samples", o.samples, "Monte Carlo sample count")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--cap", o.cap, "largest n enumerated exactly");
  sub->add_option("--threads", o.threads, "worker threads (0 = hardware)");
  sub->add_option("--out", o.out, "output directory");
}

void apply(const Overrides& o, netpol::cli::Scenario& s) {
  if (o.mode == "exact") s.engine.mode = netpol::Method::exact;
  if (o.mode == "mc") s.engine.mode = netpol::Method::monte_carlo;
  if (o.samples) s.engine.n_samples = *o.samples;
  if (o.seed) s.engine.seed = *o.seed;
  if (o.cap) s.engine.cap = *o.cap;
  if (o.threads) s.engine.threads = *o.threads;
  if (!o.out.empty()) s.out_dir = o.out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-relevant estimands under network interference"};
  app.require_subcommand(1);
  Overrides o;
  std::string config;

  auto* eval = app.add_subcommand("eval", "evaluate estimands, writes results.csv");
  eval->add_option("config", config, "scenario JSON")->required();
  add_common(eval, o);

  auto* equiv = app.add_subcommand("equiv", "route equivalence checks, writes equivalence.json");
  equiv->add_option("config", config, "scenario JSON")->required();
  add_common(equiv, o);

  auto* bic = app.add_subcommand("biclique", "biclique matching curves and closed forms");
  bic->add_option("config", config, "scenario JSON with a biclique section");
  std::optional<std::size_t> u;
  std::optional<std::size_t> v;
  std::optional<std::size_t> grid;
  bic->add_option("--u", u, "smaller half");
  bic->add_option("--v", v, "larger half");
  bic->add_option("--grid", grid, "grid intervals on [0, 1]");
  add_common(bic, o);

  auto* decide = app.add_subcommand("decide", "choose a policy from a grid, per outcome model");
  decide->add_option("config", config, "scenario JSON")->required();
  add_common(decide, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    netpol::cli::Scenario s;
    if (!config.empty()) s = netpol::cli::load_scenario(config);
    apply(o, s);
    netpol::cli::Outputs out;
    if (eval->parsed()) {
      out = netpol::cli::run_eval(s);
    } else if (equiv->parsed()) {
      out = netpol::cli::run_equiv(s);
    } else if (bic->parsed()) {
      netpol::cli::BicliqueSettings b = s.biclique.value_or(netpol::cli::BicliqueSettings{});
      if (u) b.u = *u;
      if (v) b.v = *v;
      if (grid) b.grid = *grid;
      if ((u || v) && !(s.biclique && s.biclique->y_left)) {
        b.y_left.reset();
        b.y_right.reset();
      }
      out = netpol::cli::run_biclique(b, s.engine);
    } else {
      out = netpol::cli::run_decide(s);
    }
    netpol::cli::write_outputs(out, s.out_dir);
    std::cout << out.summary;
    return 0;
  } catch (const netpol::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const netpol::ComputationError& e) {
    std::cerr << "computation error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
