#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mesh_dispatch/admm.hpp"
#include "mesh_dispatch/analysis.hpp"
#include "mesh_dispatch/oracle.hpp"

namespace mesh_dispatch {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitNotConverged = 2 };

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // overrides output.directory
  std::vector<double> rho;                   // run: at most one; sweep: the list
  std::optional<std::uint64_t> seed;
  std::ostream* log = nullptr;  // diagnostics; std::cerr when null
};

int cmd_run(const CommandOptions& opts);
int cmd_oracle(const CommandOptions& opts);
int cmd_sweep_rho(const CommandOptions& opts);
int cmd_certificate(const CommandOptions& opts);

/// Shortest decimal string that parses back to exactly v.
std::string format_number(double v);

/// trace.csv body for a finished run. With per_node false, one row per round
/// carries the maximum deltas over nodes and node = 0.
void write_trace_csv(std::ostream& os, const RunTrace& trace, bool per_node);

void write_oracle_csv(std::ostream& os, std::span<const HubParameters> hubs,
                      const CentralSolution& sol);

std::string certificate_json(const CertificateReport& rep);

}  // namespace mesh_dispatch
