#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mesh_dispatch/energy_hub.hpp"
#include "mesh_dispatch/local_solver.hpp"
#include "mesh_dispatch/network.hpp"

namespace mesh_dispatch {

struct NodeState {
  EnergyVector r = EnergyVector::Zero();
  ExtendedDecision u = ExtendedDecision::Zero();
  EnergyVector mu = EnergyVector::Zero();     // local multiplier estimate
  EnergyVector e = EnergyVector::Zero();      // tracker of the mean mismatch
  EnergyVector sigma = EnergyVector::Zero();  // neighbor average of e
  EnergyVector phi = EnergyVector::Zero();    // neighbor average of mu
  EnergyVector s = EnergyVector::Zero();
  EnergyVector d = EnergyVector::Zero();
  double alpha = 0.0;
};

struct RunConfig {
  double rho = 0.1;
  double epsilon = 0.05;
  int n_min = 300;
  int n_max = 1000;
  std::uint64_t seed = 42;
  double inner_tol = kDefaultInnerTol;
  /// Worker threads for the per-node solves within a round. Results do not
  /// depend on this value.
  int threads = 1;

  /// Throws DomainError on an invalid combination.
  void validate() const;
};

/// Per-node changes between consecutive rounds.
struct NodeDelta {
  double dr = 0.0;
  double ds = 0.0;
  double dd = 0.0;
  double dalpha = 0.0;
};

struct IterationRecord {
  int k = 0;
  std::vector<NodeDelta> deltas;
  EnergyVector mismatch = EnergyVector::Zero();
  double mu_spread = 0.0;
  double e_spread = 0.0;
  double e_max = 0.0;
  double lemma1_residual = 0.0;
  double lemma2_residual = 0.0;
  double welfare = 0.0;  // global objective F = sum of cost - utility
};

enum class RunStatus { Converged, MaxIterations };

struct RunTrace {
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::MaxIterations;
  /// First round after which the epsilon test held through termination.
  std::optional<int> iterations_to_epsilon;
  /// Mismatch of the initial point, before any round.
  EnergyVector initial_mismatch = EnergyVector::Zero();
};

struct RunResult {
  RunTrace trace;
  std::vector<NodeState> states;
};

class NodeError : public std::runtime_error {
 public:
  NodeError(int node, const std::string& what)
      : std::runtime_error("node " + std::to_string(node) + ": " + what),
        node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

/// Box-uniform random start with e = r - M u and zero multipliers.
std::vector<NodeState> init(std::span<const HubParameters> hubs,
                            const RunConfig& cfg);

/// One synchronous round. Every node reads only round-k values.
std::vector<NodeState> step(std::span<const NodeState> states,
                            const WeightMatrix& w,
                            std::span<const HubParameters> hubs,
                            const RunConfig& cfg);

/// Observer invoked with (k, states) after init (k = 0) and after every round.
using RoundObserver = std::function<void(int, std::span<const NodeState>)>;

RunResult run(std::span<const HubParameters> hubs, const Topology& t,
              const RunConfig& cfg, const RoundObserver& observer = {});

/// || sum_i e_i - sum_i (r_i - M u_i) ||_inf
double check_lemma1(std::span<const NodeState> states);

/// Residual of the disagreement recursions
///   de' = W de + (delta' - delta),  dmu' = W dmu + rho de'
/// between two consecutive rounds, where delta_i = (r_i - M u_i) - mean(e).
double check_lemma2(std::span<const NodeState> before,
                    std::span<const NodeState> after, const WeightMatrix& w,
                    double rho);

/// Global objective sum_i [cost(r_i) - utility(M1 u_i)] without feasibility
/// checks.
double total_objective(std::span<const HubParameters> hubs,
                       std::span<const NodeState> states);

int threads_from_env(int fallback = 1);

}  // namespace mesh_dispatch
