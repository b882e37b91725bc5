// mesh_dispatch: decentralized economic dispatch and demand response.
//
//   mesh_dispatch run|oracle|sweep-rho|certificate --config <path>
//                 [--out <dir>] [--rho <list>] [--seed <int>]
//
// MESH_DISPATCH_THREADS caps the worker threads used within a round.

#include <CLI11.hpp>

#include "mesh_dispatch/commands.hpp"

int main(int argc, char** argv) {
  using namespace mesh_dispatch;
  CLI::App app{"Decentralized economic dispatch and demand response for energy hubs"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string out;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool rho_list) {
    sub->add_option("--config", opts.config, "Config file (JSON)")->required();
    sub->add_option("--out", out, "Output directory");
    auto* rho = sub->add_option("--rho", opts.rho,
                                rho_list ? "Comma-separated penalty list" : "Penalty override");
    rho->delimiter(',');
    sub->add_option("--seed", seed, "Initialization seed");
  };

  auto* run_cmd = app.add_subcommand("run", "Run the decentralized iteration, write trace.csv");
  auto* oracle_cmd = app.add_subcommand("oracle", "Solve centrally, write oracle.csv");
  auto* sweep_cmd = app.add_subcommand("sweep-rho", "Run a penalty sweep, write sweep_summary.csv");
  auto* cert_cmd = app.add_subcommand("certificate", "Check the Lyapunov certificate");
  add_common(run_cmd, false);
  add_common(oracle_cmd, false);
  add_common(sweep_cmd, true);
  add_common(cert_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--out")) opts.out = out;
    if (sub->count("--seed")) opts.seed = seed;
  }
  if (run_cmd->parsed()) return cmd_run(opts);
  if (oracle_cmd->parsed()) return cmd_oracle(opts);
  if (sweep_cmd->parsed()) return cmd_sweep_rho(opts);
  return cmd_certificate(opts);
}
