#include "defgpa/commands.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
  CLI::App app{"Deformable generalized Procrustes analysis toolkit"};
  app.require_subcommand(1);

  defgpa::SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic benchmark dataset");
  synth_cmd->add_option("--config", synth.config_path, "JSON generator config");
  synth_cmd->add_option("--out", synth.out_dir, "Output dataset directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Seed override");

  defgpa::RegisterArgs reg;
  double reg_p = 0, reg_sigma = 0, reg_mu = 0, reg_tps_mu = 0;
  int reg_per_axis = 0;
  bool reg_no_refine = false;
  std::string reg_method;
  CLI::App* reg_cmd = app.add_subcommand("register", "Solve GPA on a dataset");
  reg_cmd->add_option("--dataset", reg.dataset_dir, "Dataset directory")->required();
  reg_cmd->add_option("--out", reg.out_dir, "Results directory")->required();
  reg_cmd->add_option("--config", reg.config_path, "Run-config JSON");
  CLI::Option* opt_method =
      reg_cmd->add_option("--method", reg_method, "rigid | affine | tps | kernel");
  CLI::Option* opt_p = reg_cmd->add_option("--p", reg_p, "Gaussian bandwidth factor");
  CLI::Option* opt_sigma = reg_cmd->add_option("--sigma", reg_sigma, "Explicit bandwidth");
  CLI::Option* opt_mu = reg_cmd->add_option("--mu", reg_mu, "Kernel regularization strength");
  CLI::Option* opt_axis =
      reg_cmd->add_option("--per-axis", reg_per_axis, "TPS control grid resolution");
  CLI::Option* opt_tps_mu = reg_cmd->add_option("--tps-mu", reg_tps_mu, "TPS regularization");
  CLI::Option* opt_no_refine =
      reg_cmd->add_flag("--no-refine", reg_no_refine, "Skip iterative scale refinement");
  reg_cmd->add_flag("--strict", reg.strict_rank, "Reject flat views instead of warning");
  reg_cmd->add_flag("--serial", reg.serial, "Disable OpenMP per-view parallelism");

  defgpa::EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a registration result");
  eval_cmd->add_option("--dataset", eval.dataset_dir, "Dataset directory")->required();
  eval_cmd->add_option("--results", eval.results_dir, "Results directory")->required();
  eval_cmd->add_option("--test-split", eval.split_path, "JSON id split (default: all points)");
  eval_cmd->add_option("--out", eval.out_path, "Report JSON path")->required();

  defgpa::CheckArgs check;
  CLI::App* check_cmd = app.add_subcommand("check", "Degeneracy and rank report");
  check_cmd->add_option("--dataset", check.dataset_dir, "Dataset directory")->required();
  check_cmd->add_option("--p", check.p, "Bandwidth factor for the report");
  check_cmd->add_option("--mu", check.mu, "Regularization for the report");

  defgpa::BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run a preset benchmark of all methods");
  bench_cmd->add_option("--preset", bench.preset, "Benchmark preset (liver-like)");
  bench_cmd->add_option("--out", bench.out_path, "Output CSV path")->required();
  bench_cmd->add_option("--seed", bench.seed, "Base seed");
  bench_cmd->add_option("--runs", bench.runs, "Number of seeded runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (synth_cmd->parsed()) return defgpa::cmd_synth(synth);
  if (reg_cmd->parsed()) {
    if (*opt_method) reg.method = reg_method;
    if (*opt_p) reg.p = reg_p;
    if (*opt_sigma) reg.sigma = reg_sigma;
    if (*opt_mu) reg.mu = reg_mu;
    if (*opt_axis) reg.tps_per_axis = reg_per_axis;
    if (*opt_tps_mu) reg.tps_mu = reg_tps_mu;
    if (*opt_no_refine) reg.refine = false;
    return defgpa::cmd_register(reg);
  }
  if (eval_cmd->parsed()) return defgpa::cmd_eval(eval);
  if (check_cmd->parsed()) return defgpa::cmd_check(check);
  if (bench_cmd->parsed()) return defgpa::cmd_bench(bench);
  return 1;
}
