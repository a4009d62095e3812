// mmlindley: solve, simulate and sweep Markov-modulated multiplicative
// Lindley recursions from JSON instance configs.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmlindley/cli.hpp"

namespace {

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument(item);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument(text);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mmlindley::cli;
  CLI::App app{"Numerical engine for Markov-modulated multiplicative Lindley recursions"};
  app.require_subcommand(1);

  Options opt;
  std::string u_text, p_text;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("config", opt.config, "instance config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", opt.seed, "simulation seed (overrides sim.seed)");
    cmd->add_option("--tol", opt.tol, "series truncation tolerance for evaluation");
    cmd->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
  };
  auto sim_flags = [&](CLI::App* cmd) {
    cmd->add_option("--steps", opt.n_steps, "steps per replication (overrides sim.n_steps)");
    cmd->add_option("--replications", opt.replications, "replications (overrides sim.replications)");
  };

  auto* solve = app.add_subcommand("solve", "solve an instance and write report.json / report.txt");
  common(solve);
  auto* compare = app.add_subcommand("compare", "analytic vs Monte Carlo table (compare.csv)");
  common(compare);
  sim_flags(compare);
  compare->add_flag("--corrupt-c", opt.corrupt_c, "test hook: perturb solved coefficients");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates only (simulate.json)");
  common(simulate);
  sim_flags(simulate);
  auto* sweep1 = app.add_subcommand("sweep-model1", "mean workload vs u, autocorrelated vs independent (sweep_model1.csv)");
  common(sweep1);
  sweep1->add_option("--u", u_text, "comma-separated u grid (default 1,1.5,...,5)");
  auto* sweep2 = app.add_subcommand("sweep-model2", "mean waiting time over (p, u) (sweep_model2.csv)");
  common(sweep2);
  sweep2->add_option("--u", u_text, "comma-separated u grid (default 1,1.5,...,5)");
  sweep2->add_option("--p", p_text, "comma-separated p grid (default 0.1,...,0.9)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : config_error;
  }
  try {
    if (!u_text.empty()) opt.u_grid = parse_grid(u_text);
    if (!p_text.empty()) opt.p_grid = parse_grid(p_text);
  } catch (const std::exception&) {
    std::cerr << "config error: grids must be comma-separated numbers\n";
    return config_error;
  }

  if (solve->parsed()) return cmd_solve(opt, std::cout, std::cerr);
  if (compare->parsed()) return cmd_compare(opt, std::cout, std::cerr);
  if (simulate->parsed()) return cmd_simulate(opt, std::cout, std::cerr);
  if (sweep1->parsed()) return cmd_sweep_model1(opt, std::cout, std::cerr);
  if (sweep2->parsed()) return cmd_sweep_model2(opt, std::cout, std::cerr);
  return config_error;
}
