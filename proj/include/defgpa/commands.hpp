#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace defgpa {

/// CLI subcommand bodies. Each returns a process exit code: 0 success,
/// 1 validation error, 2 numerical failure.

struct SynthArgs {
  std::string config_path;  // optional JSON config
  std::string out_dir;
  int64_t seed = -1;  // overrides the config seed when >= 0
};
int cmd_synth(const SynthArgs& args);

struct RegisterArgs {
  std::string dataset_dir;
  std::string out_dir;
  std::string config_path;  // optional run-config JSON
  std::optional<std::string> method;
  std::optional<double> p;
  std::optional<double> sigma;  // explicit bandwidth
  std::optional<double> mu;
  std::optional<int> tps_per_axis;
  std::optional<double> tps_mu;
  std::optional<bool> refine;
  bool strict_rank = false;  // reject flat views instead of warning
  bool serial = false;
};
int cmd_register(const RegisterArgs& args);

struct EvalArgs {
  std::string dataset_dir;
  std::string results_dir;
  std::string split_path;  // optional; empty = every correspondence
  std::string out_path;
};
int cmd_eval(const EvalArgs& args);

struct CheckArgs {
  std::string dataset_dir;
  double p = 0.25;
  double mu = 0.1;
};
int cmd_check(const CheckArgs& args);

struct BenchArgs {
  std::string preset = "liver-like";
  std::string out_path;
  uint64_t seed = 7;
  int runs = 1;
};
int cmd_bench(const BenchArgs& args);

}  // namespace defgpa
