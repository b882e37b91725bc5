#pragma once

#include <span>

#include <Eigen/Dense>

#include "mesh_dispatch/admm.hpp"
#include "mesh_dispatch/network.hpp"

namespace mesh_dispatch {

/// sum_i (r_i - M u_i), accumulated in node order.
EnergyVector mismatch(std::span<const NodeState> states);

struct RelativeError {
  double value = 0.0;
  bool absolute = false;  // reference was zero; value is || x_k ||
};

/// || x_k - x* || / || x* ||, or the absolute norm (flagged) when x* = 0.
RelativeError relative_error(const Eigen::VectorXd& x_k,
                             const Eigen::VectorXd& x_star);

/// (F_k - F*) / F*. Throws DomainError when F* is zero.
double welfare_gap(double f_k, double f_star);

struct Spread {
  double mu = 0.0;  // max_i || mu_i - mean(mu) ||
  double e = 0.0;   // max_i || e_i - mean(e) ||
};
Spread consensus_spread(std::span<const NodeState> states);

struct CertificateReport {
  double gamma_W1 = 0.0;
  double P_min_eig = 0.0;
  double contraction_min_eig = 0.0;  // smallest eigenvalue of P - Wt^T P Wt
  double condition_42a_residual = 0.0;
  bool verdict = false;
  bool singular = false;  // I - W1 not invertible; the other checks are skipped
};

inline constexpr double kPositiveDefiniteThreshold = 1e-10;

/// Builds W1 = (W - 11^T / n) (x) I2, Wt = [[W1, W1], [0, W1]] and the closed
/// form P with X = (I - W1)^-1:
///   P = [[2I, X - 2I], [X - 2I, X^2 - 2X + 2I]]
/// and checks It^T P (I - Wt) = [I 0] (Frobenius residual <= tol),
/// P - Wt^T P Wt > 0 and P > 0.
CertificateReport lyapunov_certificate(const WeightMatrix& w,
                                       double tol = 1e-9);

/// ||mean(mu) - mu*||^2 + sum_i (||mu_i - mean(mu)||^2 + rho^2 ||e_i - mean(e)||^2)
/// The multiplier error plus the disagreement energy of the trackers.
double lyapunov_surrogate(std::span<const NodeState> states,
                          const EnergyVector& mu_star, double rho);

}  // namespace mesh_dispatch
