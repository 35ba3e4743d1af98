#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace l1l2::cli;
  CLI::App app{"Sparse recovery by l1/l2 minimization with proximal-gradient solvers"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string config, out_dir = ".";
  std::uint64_t seed = 0;
  bool verbose = false, quiet = false;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", config, "key = value config file");
    if (config_required) c->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_flag("-v,--verbose", verbose, "per-trial progress on stderr");
    sub->add_flag("-q,--quiet", quiet, "suppress the summary");
  };
  auto add_run = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", opts.threads, "concurrent trial workers")->check(CLI::PositiveNumber);
  };

  auto* solve = app.add_subcommand("solve", "run the trials of one config; writes trials.csv and summary.json");
  add_common(solve, true);
  add_run(solve);
  solve->add_flag("--trace", opts.trace, "also write trace_<i>.csv per trial");
  auto* sweep = app.add_subcommand("sweep", "run one experiment per sweep value; writes sweep.csv");
  add_common(sweep, true);
  add_run(sweep);
  auto* prox = app.add_subcommand("prox-check", "compare the closed-form prox against the brute-force oracle");
  add_common(prox, false);
  auto* grad = app.add_subcommand("grad-check", "compare the envelope gradient against central differences");
  add_common(grad, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (!config.empty()) opts.config = config;
  opts.out_dir = out_dir;
  for (auto* sub : {solve, sweep, prox, grad})
    if (sub->count("--seed")) opts.seed = seed;
  opts.verbosity = quiet ? Verbosity::Quiet : verbose ? Verbosity::Verbose : Verbosity::Normal;

  try {
    if (solve->parsed()) return cmd_solve(opts, std::cout, std::cerr);
    if (sweep->parsed()) return cmd_sweep(opts, std::cout, std::cerr);
    if (prox->parsed()) return cmd_prox_check(opts, std::cout, std::cerr);
    return cmd_grad_check(opts, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailure;
  }
}
