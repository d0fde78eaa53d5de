#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mdpfact/cli.hpp"
#include "mdpfact/error.hpp"

namespace {

using namespace mdpfact;

int run(int argc, char** argv) {
  CLI::App app{"Factorizes a sequential decision process into independent "
               "sub-problems from logged transitions"};
  app.require_subcommand(1);

  cli::GenSyntheticOptions gen_synthetic;
  auto* gen_synthetic_cmd =
      app.add_subcommand("gen-synthetic", "Generate the built-in synthetic benchmark dataset");
  gen_synthetic_cmd->add_option("--samples", gen_synthetic.samples, "Number of transitions")
      ->required();
  gen_synthetic_cmd->add_option("--seed", gen_synthetic.seed, "Generator seed")->required();
  gen_synthetic_cmd->add_option("--out", gen_synthetic.out, "Output directory")->required();
  gen_synthetic_cmd->add_flag("--iid-resets", gen_synthetic.iid_resets,
                              "Draw a fresh state each step instead of chaining");

  cli::GenGridOptions gen_grid;
  auto* gen_grid_cmd =
      app.add_subcommand("gen-grid", "Generate per-substation grid transition datasets");
  gen_grid_cmd->add_option("--grid", gen_grid.grid, "'ieee14' or a grid model JSON path");
  gen_grid_cmd->add_option("--substations", gen_grid.substations,
                           "'all-qualifying' or comma-separated ids");
  gen_grid_cmd->add_option("--samples", gen_grid.samples, "Transitions per substation")
      ->required();
  gen_grid_cmd->add_option("--seed", gen_grid.seed, "Master seed")->required();
  gen_grid_cmd->add_option("--out", gen_grid.out, "Output directory")->required();

  cli::EstimateOptions estimate;
  auto* estimate_cmd =
      app.add_subcommand("estimate", "Estimate the mutual-information matrix from datasets");
  estimate_cmd->add_option("--dataset", estimate.datasets, "Dataset CSV (repeatable)")
      ->required();
  estimate_cmd->add_option("--k", estimate.k, "Neighbor count (default 3)");
  estimate_cmd->add_option("--shuffles", estimate.shuffles,
                           "Bias-correction shuffles (default 1)");
  estimate_cmd->add_option("--seed", estimate.seed, "Bias-correction seed")->required();
  estimate_cmd->add_option("--columns", estimate.columns,
                           "Input columns to estimate (default: all)");
  estimate_cmd->add_option("--threads", estimate.threads, "Worker threads (default: hardware)");
  estimate_cmd->add_option("--out", estimate.out, "Output directory")->required();

  cli::FactorizeOptions factorize;
  auto* factorize_cmd =
      app.add_subcommand("factorize", "Threshold an MI matrix and extract clusters");
  factorize_cmd->add_option("mi", factorize.mi_path, "MI matrix CSV")->required();
  factorize_cmd->add_option("--quantile", factorize.quantile,
                            "Per-column quantile level (default 0.5)");
  factorize_cmd->add_option("--out", factorize.out, "Output directory")->required();

  cli::TuneOptions tune;
  auto* tune_cmd =
      app.add_subcommand("tune", "Report cluster diagnostics over a quantile grid");
  tune_cmd->add_option("mi", tune.mi_path, "MI matrix CSV")->required();
  tune_cmd->add_option("--quantile-grid", tune.quantile_grid, "Quantile levels")
      ->required()
      ->delimiter(',');

  cli::EvaluateOptions evaluate;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Normalized error between two adjacency matrices");
  evaluate_cmd->add_option("--pred", evaluate.pred, "Predicted adjacency CSV")->required();
  evaluate_cmd->add_option("--truth", evaluate.truth, "Ground-truth adjacency CSV")->required();

  cli::ExportOptions exportopt;
  auto* export_cmd = app.add_subcommand("export", "Render a factorization");
  export_cmd->add_option("factorization", exportopt.factorization, "factorization.json path")
      ->required();
  export_cmd->add_option("--format", exportopt.format, "json|dot|svg|csv");
  export_cmd->add_option("--out", exportopt.out, "Output file (default: export.<format>)");

  cli::DumpGridOptions dump_grid;
  auto* dump_grid_cmd = app.add_subcommand("dump-grid", "Write a grid model as JSON");
  dump_grid_cmd->add_option("--grid", dump_grid.grid, "'ieee14' or a grid model JSON path");
  dump_grid_cmd->add_option("--out", dump_grid.out, "Output JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (gen_synthetic_cmd->parsed()) cli::cmd_gen_synthetic(gen_synthetic);
    if (gen_grid_cmd->parsed()) cli::cmd_gen_grid(gen_grid);
    if (estimate_cmd->parsed()) cli::cmd_estimate(estimate);
    if (factorize_cmd->parsed()) cli::cmd_factorize(factorize);
    if (tune_cmd->parsed()) cli::cmd_tune(tune, std::cout);
    if (evaluate_cmd->parsed()) cli::cmd_evaluate(evaluate, std::cout);
    if (export_cmd->parsed()) cli::cmd_export(exportopt);
    if (dump_grid_cmd->parsed()) cli::cmd_dump_grid(dump_grid);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
