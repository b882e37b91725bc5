#pragma once

#include <stdexcept>

#include "mesh_dispatch/energy_hub.hpp"
#include "mesh_dispatch/qp.hpp"

namespace mesh_dispatch {

inline constexpr double kDefaultInnerTol = 1e-8;
inline constexpr double kDefaultFeasTol = 1e-8;
inline constexpr double kPortRidge = 1e-10;

/// One hub's per-round problem:
///   min F(r, u) + phi^T (r - M u) + (rho / 2) || (r - r_k) - M (u - u_k) + sigma ||^2
/// over the local feasible set.
struct Subproblem {
  HubParameters hub;
  double rho = 0.1;
  EnergyVector r_anchor = EnergyVector::Zero();
  ExtendedDecision u_anchor = ExtendedDecision::Zero();
  EnergyVector sigma = EnergyVector::Zero();
  EnergyVector phi = EnergyVector::Zero();
};

struct LocalSolution {
  EnergyVector r;
  ExtendedDecision u;
  double kkt_residual = 0.0;
  double objective = 0.0;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, LocalSolution best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const LocalSolution& best() const { return best_; }

 private:
  LocalSolution best_;
};

/// Full-space gradient of the subproblem objective: (d/dr, d/du) stacked into
/// a 7-vector, treating all five entries of u as independent.
using FullGradient = Eigen::Matrix<double, 7, 1>;

/// Reduced coordinates x = (r_e, r_g, u1, u2, u3); the demand entries u4, u5
/// are eliminated through the coupling equality.
using ReducedPoint = Eigen::Matrix<double, 5, 1>;

/// Value of the subproblem objective at (r, u); the indicator of the feasible
/// set is not included.
double subproblem_objective(const Subproblem& sp, const EnergyVector& r,
                            const ExtendedDecision& u);

FullGradient subproblem_gradient(const Subproblem& sp, const EnergyVector& r,
                                 const ExtendedDecision& u);

ReducedPoint reduce(const EnergyVector& r, const ExtendedDecision& u);
void expand(const EfficiencySet& eff, const ReducedPoint& x, EnergyVector& r,
            ExtendedDecision& u);

/// The feasible set in reduced coordinates as G x <= h.
struct ReducedPolytope {
  Eigen::Matrix<double, 14, 5> G;
  Eigen::Matrix<double, 14, 1> h;
};
ReducedPolytope reduced_polytope(const HubParameters& hub);

/// Exact emptiness check of the local feasible set.
bool omega_nonempty(const HubParameters& hub);

/// Quadratic model of the subproblem in reduced coordinates. `rho` may be
/// zero here, which drops the proximal term (used by the centralized oracle).
qp::Problem reduced_qp(const HubParameters& hub, double rho,
                       const EnergyVector& phi, const EnergyVector& offset);

/// Norm of the projected gradient onto the tangent cone of the feasible set
/// at (r, u), in reduced coordinates; the limit of
/// || x - P(x - t g) || / t as t -> 0. Rows with slack below
/// active_tol * max(1, |h|) count as active.
double kkt_residual(const Subproblem& sp, const EnergyVector& r,
                    const ExtendedDecision& u, double active_tol = 1e-9);

/// Throws ModelError when the feasible set is empty and ConvergenceError when
/// the certified residual exceeds tol.
LocalSolution solve_local(const Subproblem& sp, double tol = kDefaultInnerTol);

/// Minimizer of F(r, u) + mu^T (r - M u) over the feasible set; the oracle's
/// inner problem.
LocalSolution minimize_lagrangian(const HubParameters& hub,
                                  const EnergyVector& mu,
                                  double tol = kDefaultInnerTol);

}  // namespace mesh_dispatch
