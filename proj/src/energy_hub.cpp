#include "mesh_dispatch/energy_hub.hpp"

#include <cmath>
#include <sstream>

namespace mesh_dispatch {

namespace {

bool finite(const EnergyVector& v) { return v.allFinite(); }

void require_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    std::ostringstream msg;
    msg << "alpha must lie in [0, 1], got " << alpha;
    throw DomainError(msg.str());
  }
}

void check_interval(const char* name, const EnergyVector& lo,
                    const EnergyVector& hi) {
  if (!finite(lo) || !finite(hi)) {
    throw ModelError(std::string(name) + " bounds must be finite");
  }
  for (int c = 0; c < 2; ++c) {
    if (lo[c] > hi[c]) {
      std::ostringstream msg;
      msg << name << (c == 0 ? "_e" : "_g") << " lower bound " << lo[c]
          << " exceeds upper bound " << hi[c];
      throw ModelError(msg.str());
    }
  }
}

void check_bounds(std::vector<std::string>& out, const char* name,
                  const EnergyVector& value, const EnergyVector& lo,
                  const EnergyVector& hi, double tol) {
  for (int c = 0; c < 2; ++c) {
    const char* carrier = c == 0 ? "_e" : "_g";
    if (value[c] < lo[c] - tol || value[c] > hi[c] + tol) {
      std::ostringstream msg;
      msg << name << carrier << "=" << value[c] << " outside [" << lo[c]
          << ", " << hi[c] << "]";
      out.push_back(msg.str());
    }
  }
}

}  // namespace

void EfficiencySet::validate() const {
  for (double eta : {eta_ee, eta_ce, eta_ch, eta_gh}) {
    if (!(eta > 0.0 && eta <= 1.0)) {
      std::ostringstream msg;
      msg << "efficiency " << eta << " outside (0, 1]";
      throw ModelError(msg.str());
    }
  }
}

void HubParameters::validate() const {
  efficiencies.validate();
  check_interval("r", r_lo, r_hi);
  check_interval("s", s_lo, s_hi);
  check_interval("d", d_lo, d_hi);
  for (const QuadraticCoeffs* q : {&cost_e, &cost_g, &util_e, &util_g}) {
    if (!std::isfinite(q->c2) || !std::isfinite(q->c1) ||
        !std::isfinite(q->c0)) {
      throw ModelError("welfare coefficients must be finite");
    }
  }
  // Convex cost, concave utility.
  if (cost_e.c2 < 0.0 || cost_g.c2 < 0.0) {
    throw ModelError("cost quadratic coefficients must be nonnegative");
  }
  if (util_e.c2 < 0.0 || util_g.c2 < 0.0) {
    throw ModelError("utility quadratic coefficients must be nonnegative");
  }
  if (taguchi_theta) {
    if (!(*taguchi_theta >= 0.0) || !std::isfinite(*taguchi_theta)) {
      throw ModelError("taguchi_theta must be finite and nonnegative");
    }
    if (!d_hat || !finite(*d_hat)) {
      throw ModelError("taguchi_theta requires a finite d_hat");
    }
  }
  if (!std::isfinite(constant)) throw ModelError("constant must be finite");
}

CouplingOperators CouplingOperators::from(const EfficiencySet& eff) {
  CouplingOperators ops;
  ops.B << eff.eta_ee, eff.eta_ce, 0.0,  //
      0.0, eff.eta_ch, eff.eta_gh;
  ops.B_bar.setZero();
  ops.B_bar.leftCols<3>() = ops.B;
  ops.M << 1, 0, 0, 0, 0,  //
      0, 1, 1, 0, 0;
  ops.M1 << 0, 0, 0, 1, 0,  //
      0, 0, 0, 0, 1;
  ops.M2 << 0, 1, 0, 0, 0;
  ops.M3 << 0, 0, 1, 0, 0;
  return ops;
}

Eigen::Matrix2d coupling_matrix(const EfficiencySet& eff, double alpha) {
  require_alpha(alpha);
  Eigen::Matrix2d a;
  a << eff.eta_ee, alpha * eff.eta_ce,  //
      0.0, alpha * eff.eta_ch + (1.0 - alpha) * eff.eta_gh;
  return a;
}

PortVector lift(const EnergyVector& s, double alpha) {
  require_alpha(alpha);
  return {s[0], alpha * s[1], (1.0 - alpha) * s[1]};
}

Recovered recover(const ExtendedDecision& u, double alpha_fallback,
                  double tiebreak_tol) {
  const double gas = u[1] + u[2];
  Recovered out;
  out.s = {u[0], gas};
  out.d = {u[3], u[4]};
  out.alpha = gas > tiebreak_tol ? u[1] / gas : alpha_fallback;
  return out;
}

ExtendedDecision compose_decision(const EfficiencySet& eff,
                                  const EnergyVector& s, double alpha) {
  const PortVector l = lift(s, alpha);
  const auto ops = CouplingOperators::from(eff);
  ExtendedDecision u;
  u.head<3>() = l;
  u.tail<2>() = ops.B * l;
  return u;
}

double cost(const HubParameters& p, const EnergyVector& r) {
  return p.cost_e(r[0]) + p.cost_g(r[1]) + p.constant;
}

double utility(const HubParameters& p, const EnergyVector& d) {
  double value = p.util_e.c0 + p.util_e.c1 * d[0] - p.util_e.c2 * d[0] * d[0] +
                 p.util_g.c0 + p.util_g.c1 * d[1] - p.util_g.c2 * d[1] * d[1];
  if (p.taguchi_theta && p.d_hat) {
    value -= *p.taguchi_theta * (d - *p.d_hat).squaredNorm();
  }
  return value;
}

double local_welfare(const HubParameters& p, const TradePrice& zeta,
                     const EnergyVector& r, const EnergyVector& s,
                     const EnergyVector& d) {
  return utility(p, d) - cost(p, r) - zeta.vector().dot(s - r);
}

std::vector<std::string> omega_violations(const HubParameters& p,
                                          const EnergyVector& r,
                                          const ExtendedDecision& u,
                                          double tol) {
  std::vector<std::string> out;
  if (!r.allFinite() || !u.allFinite()) {
    out.emplace_back("non-finite decision");
    return out;
  }
  const auto ops = CouplingOperators::from(p.efficiencies);
  check_bounds(out, "r", r, p.r_lo, p.r_hi, tol);
  check_bounds(out, "s", ops.M * u, p.s_lo, p.s_hi, tol);
  check_bounds(out, "d", ops.M1 * u, p.d_lo, p.d_hi, tol);
  if ((ops.M2 * u)(0) < -tol) out.emplace_back("l2 negative");
  if ((ops.M3 * u)(0) < -tol) out.emplace_back("l3 negative");
  const double coupling = (ops.B_bar * u - ops.M1 * u).lpNorm<Eigen::Infinity>();
  if (!(coupling <= tol)) {
    std::ostringstream msg;
    msg << "coupling equality violated by " << coupling;
    out.push_back(msg.str());
  }
  return out;
}

bool in_omega(const HubParameters& p, const EnergyVector& r,
              const ExtendedDecision& u, double tol) {
  return omega_violations(p, r, u, tol).empty();
}

}  // namespace mesh_dispatch
