// Command-line front end: run PCS experiments, inspect allocation ratios of a
// single run, and estimate the posterior PCS bound after warmup.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robsel/robsel.hpp"

namespace {

struct Source {
  std::string config;
  std::string preset;
};

void add_source(CLI::App* cmd, Source& src) {
  auto* c = cmd->add_option("--config", src.config, "configuration file");
  auto* p = cmd->add_option("--preset", src.preset, "built-in experiment: exp1, exp2 or exp3");
  c->excludes(p);
}

robsel::ExperimentConfig load(const Source& src) {
  if (!src.config.empty()) return robsel::load_config(src.config);
  if (!src.preset.empty()) return robsel::preset(src.preset);
  throw robsel::ConfigError("one of --config or --preset is required");
}

std::vector<robsel::PolicyKind> parse_policies(const std::string& list) {
  std::vector<robsel::PolicyKind> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "all") {
      out.insert(out.end(), robsel::kAllPolicies.begin(), robsel::kAllPolicies.end());
    } else {
      out.push_back(robsel::parse_policy(item));
    }
  }
  if (out.empty()) throw robsel::ConfigError("--policy is empty");
  return out;
}

// Budget overrides drop checkpoints that no longer fit.
void override_budget(robsel::ExperimentConfig& c, std::optional<std::int64_t> budget) {
  if (!budget) return;
  c.total_budget = *budget;
  std::vector<std::int64_t> kept;
  for (auto b : c.checkpoints)
    if (b <= c.total_budget) kept.push_back(b);
  c.checkpoints = kept;
}

std::string pair_label(std::size_t i, std::size_t d) {
  return "(" + std::to_string(i) + "," + std::to_string(d) + ")";
}

int run_ratios(robsel::ExperimentConfig c, std::uint64_t replication) {
  const robsel::ReplicationResult res = robsel::run_replication(c, replication);
  const robsel::Ranking truth = robsel::compute_ranking(res.true_mean);
  const robsel::AllocationRatios empirical = robsel::empirical_ratios(res.final_state, truth);
  const robsel::AllocationRatios target =
      robsel::solve_optimal_ratios(res.true_mean, c.sampling_var, truth);

  std::cout << "policy " << robsel::policy_name(c.policy) << ", budget " << c.total_budget
            << ", true best " << res.true_best << ", selected " << res.selected.back() << "\n";
  std::cout << std::left << std::setw(10) << "pair" << std::setw(8) << "support" << std::setw(14)
            << "empirical" << std::setw(14) << "target" << "count\n";
  double max_dev = 0.0;
  for (std::size_t i = 0; i < c.k; ++i)
    for (std::size_t d = 0; d < c.m; ++d) {
      const robsel::PairIndex p{i, d};
      const double e = empirical.at(p);
      const double t = target.at(p);
      max_dev = std::max(max_dev, std::abs(e - t));
      std::cout << std::setw(10) << pair_label(i, d) << std::setw(8)
                << (target.in_support(p) ? "yes" : "no") << std::setw(14) << robsel::format_number(e)
                << std::setw(14) << robsel::format_number(t) << res.final_state.count(p) << "\n";
    }
  const robsel::Residuals r = robsel::optimality_residuals(empirical.on_support(), res.true_mean,
                                                           c.sampling_var, truth);
  std::cout << "residuals: scenario " << robsel::format_number(r.scenario_balance) << ", competitor "
            << robsel::format_number(r.competitor_balance) << ", total "
            << robsel::format_number(r.total_balance) << "\n";
  std::cout << "max deviation from target " << robsel::format_number(max_dev) << "\n";
  std::cout << "off-support mass " << robsel::format_number(empirical.off_support_mass()) << "\n";
  return 0;
}

int run_bound(robsel::ExperimentConfig c, std::int64_t draws, std::uint64_t replication) {
  c.total_budget = c.warmup_budget();
  c.checkpoints.clear();
  const robsel::ReplicationResult res = robsel::run_replication(c, replication);
  const robsel::Ranking ranking = robsel::compute_ranking(res.final_state);
  robsel::Stream rng(c.master_seed, replication, 0);
  const auto est = robsel::estimate_posterior_pcs(res.final_state, ranking, draws, rng);
  std::cout << "state after warmup: " << c.warmup_budget() << " samples, selected "
            << ranking.best() << ", true best " << res.true_best << "\n";
  std::cout << "bound " << robsel::format_number(est.bound.estimate) << " (se "
            << robsel::format_number(est.bound.std_error) << ")\n";
  std::cout << "direct " << robsel::format_number(est.direct.estimate) << " (se "
            << robsel::format_number(est.direct.std_error) << ")\n";
  std::cout << "draws " << draws << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust ranking and selection: sequential allocation experiments"};
  app.require_subcommand(1);

  Source run_src;
  std::string policies = "raoda";
  std::optional<std::int64_t> budget;
  std::optional<std::int64_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
  auto* run = app.add_subcommand("run", "estimate PCS curves and write them as CSV");
  add_source(run, run_src);
  run->add_option("--policy", policies, "policy or comma list (raoda, rocba, ea, ptv, all)");
  run->add_option("--budget", budget, "total budget T");
  run->add_option("--reps", reps, "macro-replications");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--threads", threads, "worker threads (0: all cores)");
  run->add_option("--out", out, "output CSV path")->required();

  Source ratio_src;
  std::string ratio_policy = "raoda";
  std::optional<std::int64_t> ratio_budget;
  std::optional<std::uint64_t> ratio_seed;
  std::uint64_t ratio_rep = 0;
  auto* ratios = app.add_subcommand("ratios", "compare one run's allocation with the optimal ratios");
  add_source(ratios, ratio_src);
  ratios->add_option("--policy", ratio_policy, "raoda, rocba, ea or ptv");
  ratios->add_option("--budget", ratio_budget, "total budget T");
  ratios->add_option("--seed", ratio_seed, "master seed");
  ratios->add_option("--replication", ratio_rep, "replication index");

  Source bound_src;
  std::int64_t draws = 100000;
  std::optional<std::uint64_t> bound_seed;
  std::uint64_t bound_rep = 0;
  auto* bound = app.add_subcommand("bound", "posterior PCS bound for the state after warmup");
  add_source(bound, bound_src);
  bound->add_option("--draws", draws, "Monte Carlo draws");
  bound->add_option("--seed", bound_seed, "master seed");
  bound->add_option("--replication", bound_rep, "replication index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      robsel::ExperimentConfig c = load(run_src);
      override_budget(c, budget);
      if (reps) c.macro_reps = *reps;
      if (seed) c.master_seed = *seed;
      if (threads) c.threads = *threads;
      c.validate();
      robsel::ExperimentDiagnostics diag;
      const robsel::PcsCurve curve = robsel::run_experiments(c, parse_policies(policies), &diag);
      robsel::emit_csv(curve, out);
      std::cerr << "wrote " << curve.rows.size() << " rows to " << out << " (mean redraws "
                << diag.mean_redraws << ", approximate targets " << diag.approximate_targets
                << ", policy fallbacks " << diag.policy_fallbacks << ")\n";
      return 0;
    }
    if (*ratios) {
      robsel::ExperimentConfig c = load(ratio_src);
      override_budget(c, ratio_budget);
      if (ratio_seed) c.master_seed = *ratio_seed;
      c.policy = robsel::parse_policy(ratio_policy);
      c.validate();
      return run_ratios(c, ratio_rep);
    }
    if (*bound) {
      robsel::ExperimentConfig c = load(bound_src);
      if (bound_seed) c.master_seed = *bound_seed;
      return run_bound(c, draws, bound_rep);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
