#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mesh_dispatch {

/// Per-carrier quantity: index 0 is electricity, index 1 is gas (or heat on
/// the demand side).
using EnergyVector = Eigen::Vector2d;

/// Hypothetical-port decision u = (l1, l2, l3, d_e, d_h), where
/// l = (s_e, alpha * s_g, (1 - alpha) * s_g).
using ExtendedDecision = Eigen::Matrix<double, 5, 1>;

using PortVector = Eigen::Vector3d;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EfficiencySet {
  double eta_ee = 0.9;
  double eta_ce = 0.7;
  double eta_ch = 0.5;
  double eta_gh = 0.4;

  /// Throws ModelError unless every efficiency lies in (0, 1].
  void validate() const;
};

/// c2 * x^2 + c1 * x + c0
struct QuadraticCoeffs {
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;

  double operator()(double x) const { return (c2 * x + c1) * x + c0; }
  double derivative(double x) const { return 2.0 * c2 * x + c1; }
};

struct TradePrice {
  double zeta_e = 0.0;
  double zeta_g = 0.0;

  EnergyVector vector() const { return {zeta_e, zeta_g}; }
};

struct HubParameters {
  EfficiencySet efficiencies;
  EnergyVector r_lo = EnergyVector::Zero();
  EnergyVector r_hi = EnergyVector::Zero();
  EnergyVector s_lo = EnergyVector::Zero();
  EnergyVector s_hi = EnergyVector::Zero();
  EnergyVector d_lo = EnergyVector::Zero();
  EnergyVector d_hi = EnergyVector::Zero();
  QuadraticCoeffs cost_e;
  QuadraticCoeffs cost_g;
  QuadraticCoeffs util_e;
  QuadraticCoeffs util_g;
  // Merged constant of the cost and utility quadratics. Enters cost() with a
  // positive sign and never affects any optimizer.
  double constant = 0.0;
  std::optional<double> taguchi_theta;
  std::optional<EnergyVector> d_hat;

  /// Checks bound ordering, finiteness, efficiency ranges and the
  /// convex-cost / concave-utility sign conditions. Throws ModelError.
  void validate() const;
};

/// Constant operators of the hypothetical-port model.
struct CouplingOperators {
  Eigen::Matrix<double, 2, 3> B;
  Eigen::Matrix<double, 2, 5> B_bar;
  Eigen::Matrix<double, 2, 5> M;
  Eigen::Matrix<double, 2, 5> M1;
  Eigen::Matrix<double, 1, 5> M2;
  Eigen::Matrix<double, 1, 5> M3;

  static CouplingOperators from(const EfficiencySet& eff);
};

/// A(alpha) mapping supply s to demand d = A s.
Eigen::Matrix2d coupling_matrix(const EfficiencySet& eff, double alpha);

/// Splits the gas input across the two hypothetical ports.
PortVector lift(const EnergyVector& s, double alpha);

struct Recovered {
  EnergyVector s;
  EnergyVector d;
  double alpha;
};

inline constexpr double kAlphaTiebreakTol = 1e-9;

/// Inverse of lift. When u2 + u3 <= tiebreak_tol no gas flows and the split
/// is meaningless, so alpha_fallback is reported.
Recovered recover(const ExtendedDecision& u, double alpha_fallback = 0.0,
                  double tiebreak_tol = kAlphaTiebreakTol);

/// Builds u from (s, alpha) with the demand side set to B * lift(s, alpha).
ExtendedDecision compose_decision(const EfficiencySet& eff,
                                  const EnergyVector& s, double alpha);

double cost(const HubParameters& p, const EnergyVector& r);
double utility(const HubParameters& p, const EnergyVector& d);

/// Local welfare U(d) - C(r) - zeta^T (s - r).
double local_welfare(const HubParameters& p, const TradePrice& zeta,
                     const EnergyVector& r, const EnergyVector& s,
                     const EnergyVector& d);

/// Human-readable list of violated constraints of the local feasible set;
/// empty iff (r, u) is feasible at tolerance tol.
std::vector<std::string> omega_violations(const HubParameters& p,
                                          const EnergyVector& r,
                                          const ExtendedDecision& u,
                                          double tol);

bool in_omega(const HubParameters& p, const EnergyVector& r,
              const ExtendedDecision& u, double tol);

}  // namespace mesh_dispatch
