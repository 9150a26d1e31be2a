// Experiment front end: run configured scenarios, certify persistent
// excitation of traces, evaluate robustness bounds, and cross-check the
// recursion against the batch cost.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "gfrls/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generalized forgetting recursive least squares toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string trace_path;
  std::string inputs_path;
  std::optional<std::string> run_format;
  std::string pe_format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool strict = false;
  bool eiv = false;
  int window = 1;
  int n = 1;
  int p = 1;
  std::optional<int> sweep_max;

  auto* run_cmd = app.add_subcommand("run", "run an experiment from a config");
  run_cmd->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  run_cmd->add_flag("--strict", strict,
                    "exit nonzero on any guarantee violation");
  run_cmd->add_option("--seed", seed, "override the scenario seed");
  run_cmd->add_option("--out-dir", out_dir, "override the output directory");
  run_cmd->add_option("--format", run_format, "artifact format")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* pe_cmd =
      app.add_subcommand("certify-pe", "certify persistent excitation of a trace");
  pe_cmd->add_option("trace", trace_path, "trace CSV")->required();
  pe_cmd->add_option("--window", window, "persistency window")->required();
  pe_cmd->add_option("--n", n, "parameter dimension")->required();
  pe_cmd->add_option("--p", p, "measurement dimension")->required();
  pe_cmd->add_option("--sweep-max", sweep_max,
                     "also report the smallest certifying window up to this");
  pe_cmd->add_option("--format", pe_format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* bound_cmd =
      app.add_subcommand("bound", "robustness bound from explicit constants");
  bound_cmd->add_option("inputs", inputs_path, "bound inputs (JSON)")
      ->required();
  bound_cmd->add_flag("--eiv", eiv,
                      "errors-in-variables specialization (zero drift)");

  auto* oracle_cmd = app.add_subcommand(
      "oracle", "compare the recursion against the batch-cost minimizer");
  oracle_cmd->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  oracle_cmd->add_option("--seed", seed, "override the scenario seed");

  CLI11_PARSE(app, argc, argv);

  try {
    gfrls::CliOverrides overrides{seed, out_dir, run_format, strict};
    if (app.got_subcommand(run_cmd)) {
      return gfrls::run_experiment(config_path, overrides);
    }
    if (app.got_subcommand(pe_cmd)) {
      return gfrls::certify_pe(trace_path, window, n, p, sweep_max,
                               pe_format);
    }
    if (app.got_subcommand(bound_cmd)) {
      return gfrls::bound_from_inputs(inputs_path, eiv);
    }
    if (app.got_subcommand(oracle_cmd)) {
      return gfrls::oracle_check(config_path, overrides);
    }
  } catch (const gfrls::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
