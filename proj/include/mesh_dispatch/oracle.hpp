#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "mesh_dispatch/energy_hub.hpp"
#include "mesh_dispatch/local_solver.hpp"

namespace mesh_dispatch {

inline constexpr double kOracleTol = 1e-7;

struct CentralSolution {
  std::vector<EnergyVector> r_star;
  std::vector<ExtendedDecision> u_star;
  double F_star = 0.0;
  EnergyVector mu_star = EnergyVector::Zero();  // multiplier of sum(r - M u) = 0
  double dual_value = 0.0;                      // q(mu_star)
  EnergyVector coupling_residual = EnergyVector::Zero();
  double omega_violation = 0.0;  // worst bound/equality violation over nodes
  double dual_gap = 0.0;         // |q(mu_star) - F_star|
  int iterations = 0;
};

class OracleError : public std::runtime_error {
 public:
  OracleError(const std::string& what, CentralSolution best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const CentralSolution& best() const { return best_; }

 private:
  CentralSolution best_;
};

struct OracleOptions {
  double tol = kOracleTol;
  int max_iterations = 20000;
  double inner_tol = kDefaultInnerTol;
  int threads = 1;
};

/// Dual decomposition of the convex welfare problem: gradient ascent with
/// backtracking on q(mu) = sum_i min [F_i + mu^T (r_i - M u_i)]. Stops when
/// both || sum (r_i - M u_i) || and |mu^T sum (r_i - M u_i)| are <= tol.
/// Throws ModelError for an empty hub list or when no allocation inside the
/// local sets meets the coupling, OracleError at the iteration cap.
CentralSolution solve_centralized(std::span<const HubParameters> hubs,
                                  const OracleOptions& opts = {});

/// q(mu) together with the per-node minimizers.
struct DualEvaluation {
  double value = 0.0;
  EnergyVector gradient = EnergyVector::Zero();
  std::vector<LocalSolution> nodes;
};
DualEvaluation dual_function(std::span<const HubParameters> hubs,
                             const EnergyVector& mu, double inner_tol,
                             int threads = 1);

/// sum_i [cost(r_i) - utility(M1 u_i)] after checking every node's feasible
/// set at tolerance tol; throws ModelError listing the violations.
double global_welfare(std::span<const HubParameters> hubs,
                      std::span<const EnergyVector> r,
                      std::span<const ExtendedDecision> u,
                      double tol = kDefaultFeasTol);

}  // namespace mesh_dispatch
