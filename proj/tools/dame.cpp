#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dame/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dynamic additive and multiplicative effects network models"};
  app.require_subcommand(1);

  std::string config, out, data, draws, tasks;
  bool force = false;

  auto* sim = app.add_subcommand("simulate", "Simulate a synthetic dynamic network");
  sim->add_option("--config", config, "JSON run configuration with a simulate section")->required();
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_flag("--force", force, "Overwrite an earlier run in --out");

  dame::cli::FitOptions fit_opt;
  auto* fit = app.add_subcommand("fit", "Run the Gibbs sampler");
  fit->add_option("--config", config, "JSON run configuration")->required();
  fit->add_option("--data", data, "Directory with network.csv (or votes.csv), covariates.csv, availability.csv")
      ->required();
  fit->add_option("--out", out, "Output directory")->required();
  fit->add_option("--chains", fit_opt.chains, "Number of chains; chain k uses seed + k - 1")->capture_default_str();
  fit->add_flag("--force", force, "Overwrite an earlier run in --out");

  dame::cli::AnalyzeOptions an_opt;
  std::string an_out, node;
  auto* an = app.add_subcommand("analyze", "Posterior summaries, predictive checks and latent positions");
  an->add_option("--draws", draws, "Output directory of a fit")->required();
  an->add_option("--tasks", tasks, "Comma-separated subset of summary,ppc,dc,latent")->required();
  an->add_option("--out", an_out, "Output directory (default <draws>/analysis)");
  an->add_flag("--svg", an_opt.svg, "Also render SVG plots");
  an->add_flag("--force", force, "Overwrite an earlier analysis in --out");
  an->add_option("--ppc-count", an_opt.ppc_count, "Posterior predictive replicates")->capture_default_str();
  an->add_option("--max-lag", an_opt.max_lag, "Largest lag for degree correlations")->capture_default_str();
  an->add_option("--seed", an_opt.seed, "Seed for draw selection and predictive noise")->capture_default_str();
  an->add_option("--node", node, "Node label shown in the predictive-check plots (default: random)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  return dame::cli::guarded([&] {
    if (*sim) {
      dame::cli::cmd_simulate(config, out, force);
    } else if (*fit) {
      fit_opt.config = config;
      fit_opt.data = data;
      fit_opt.out = out;
      fit_opt.force = force;
      dame::cli::cmd_fit(fit_opt);
    } else {
      an_opt.draws = draws;
      an_opt.tasks = dame::cli::parse_tasks(tasks);
      if (!an_out.empty()) an_opt.out = an_out;
      if (!node.empty()) an_opt.node = node;
      an_opt.force = force;
      dame::cli::cmd_analyze(an_opt);
    }
  });
}
