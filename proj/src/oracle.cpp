#include "mesh_dispatch/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace mesh_dispatch {

namespace {

// Multipliers this large mean the coupling cannot be met inside the bounds.
constexpr double kRunawayMultiplier = 1e8;
// A large sufficient-increase constant rejects the overshooting steps that
// make plain gradient ascent oscillate on the piecewise-quadratic dual.
constexpr double kArmijo = 0.4;
// Value differences below this many ulps of |q| are rounding noise.
constexpr double kValueNoise = 64.0 * std::numeric_limits<double>::epsilon();
constexpr int kMaxBacktracks = 60;
// Least mismatch above this means no allocation meets the coupling.
constexpr double kAggregateTol = 1e-6;

double node_lagrangian(const HubParameters& hub, const EnergyVector& mu,
                       const LocalSolution& s) {
  const auto ops = CouplingOperators::from(hub.efficiencies);
  return cost(hub, s.r) - utility(hub, ops.M1 * s.u) +
         mu.dot(s.r - ops.M * s.u);
}

// Largest amount by which (r, u) leaves the local feasible set.
double omega_violation(const HubParameters& hub, const EnergyVector& r,
                       const ExtendedDecision& u) {
  const auto ops = CouplingOperators::from(hub.efficiencies);
  auto box = [](const EnergyVector& v, const EnergyVector& lo,
                const EnergyVector& hi) {
    return std::max((lo - v).maxCoeff(), (v - hi).maxCoeff());
  };
  double worst = 0.0;
  worst = std::max(worst, box(r, hub.r_lo, hub.r_hi));
  worst = std::max(worst, box(ops.M * u, hub.s_lo, hub.s_hi));
  worst = std::max(worst, box(ops.M1 * u, hub.d_lo, hub.d_hi));
  worst = std::max({worst, -u[1], -u[2]});
  worst = std::max(worst, (ops.B_bar * u - ops.M1 * u).lpNorm<Eigen::Infinity>());
  return worst;
}

CentralSolution assemble(std::span<const HubParameters> hubs,
                         const EnergyVector& mu, const DualEvaluation& ev,
                         int iterations) {
  CentralSolution out;
  out.mu_star = mu;
  out.dual_value = ev.value;
  out.coupling_residual = ev.gradient;
  out.iterations = iterations;
  for (std::size_t i = 0; i < hubs.size(); ++i) {
    const auto& node = ev.nodes[i];
    const auto ops = CouplingOperators::from(hubs[i].efficiencies);
    out.r_star.push_back(node.r);
    out.u_star.push_back(node.u);
    out.F_star += cost(hubs[i], node.r) - utility(hubs[i], ops.M1 * node.u);
    out.omega_violation =
        std::max(out.omega_violation, omega_violation(hubs[i], node.r, node.u));
  }
  out.dual_gap = std::abs(out.dual_value - out.F_star);
  return out;
}

// Smallest || sum_i (r_i - M u_i) || over the product of the local sets, as a
// QP in the stacked reduced coordinates. Zero iff the coupling can be met.
double aggregate_infeasibility(std::span<const HubParameters> hubs) {
  const int n = static_cast<int>(hubs.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 5 * n);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(14 * n, 5 * n);
  Eigen::VectorXd h(14 * n);
  for (int i = 0; i < n; ++i) {
    const auto poly = reduced_polytope(hubs[i]);
    G.block(14 * i, 5 * i, 14, 5) = poly.G;
    h.segment(14 * i, 14) = poly.h;
    // r - M u = (x0 - x2, x1 - x3 - x4)
    A.block(0, 5 * i, 2, 5) << 1, 0, -1, 0, 0,
                               0, 1, 0, -1, -1;
  }
  qp::Problem p{A.transpose() * A + 1e-12 * Eigen::MatrixXd::Identity(5 * n, 5 * n),
                Eigen::VectorXd::Zero(5 * n), G, h};
  const auto res = qp::solve(p);
  return (A * res.x).norm();
}

}  // namespace

DualEvaluation dual_function(std::span<const HubParameters> hubs,
                             const EnergyVector& mu, double inner_tol,
                             int threads) {
  const int n = static_cast<int>(hubs.size());
  DualEvaluation ev;
  ev.nodes.resize(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      try {
        ev.nodes[i] = minimize_lagrangian(hubs[i], mu, inner_tol);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(threads, 1, std::max(n, 1));
  if (workers == 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const int chunk = (n + workers - 1) / workers;
    for (int b = 0; b < n; b += chunk) pool.emplace_back(work, b, std::min(n, b + chunk));
  }
  for (int i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& ex) {
      throw ModelError("node " + std::to_string(i + 1) + ": " + ex.what());
    }
  }
  for (int i = 0; i < n; ++i) {
    const auto ops = CouplingOperators::from(hubs[i].efficiencies);
    ev.value += node_lagrangian(hubs[i], mu, ev.nodes[i]);
    ev.gradient += ev.nodes[i].r - ops.M * ev.nodes[i].u;
  }
  return ev;
}

CentralSolution solve_centralized(std::span<const HubParameters> hubs,
                                  const OracleOptions& opts) {
  if (hubs.empty()) throw ModelError("no hubs to dispatch");
  if (!(opts.tol > 0.0)) throw DomainError("oracle tolerance must be positive");
  for (const auto& hub : hubs) {
    hub.validate();
    if (!omega_nonempty(hub)) throw ModelError("a hub has an empty feasible set");
  }
  if (const double gap = aggregate_infeasibility(hubs); gap > kAggregateTol) {
    std::ostringstream msg;
    msg << "aggregate coupling infeasible: the local sets leave a mismatch of at least "
        << gap;
    throw ModelError(msg.str());
  }

  EnergyVector mu = EnergyVector::Zero();
  DualEvaluation ev = dual_function(hubs, mu, opts.inner_tol, opts.threads);
  for (int it = 0; it < opts.max_iterations; ++it) {
    const double gnorm = ev.gradient.norm();
    if (gnorm <= opts.tol && std::abs(mu.dot(ev.gradient)) <= opts.tol) {
      return assemble(hubs, mu, ev, it);
    }
    // q is concave; ascend along its gradient with an Armijo backtrack.
    double step = 1.0;
    bool accepted = false;
    for (int b = 0; b < kMaxBacktracks; ++b, step *= 0.5) {
      const EnergyVector trial = mu + step * ev.gradient;
      DualEvaluation next = dual_function(hubs, trial, opts.inner_tol, opts.threads);
      // Armijo test on q. Near the optimum the value difference drowns in
      // rounding, so the equivalent-or-stronger certificate for concave q,
      // grad q(trial) . g >= c ||g||^2, is accepted as well.
      const double gain = kArmijo * step * gnorm * gnorm;
      const bool value_ok = gain > kValueNoise * std::abs(ev.value) &&
                            next.value >= ev.value + gain;
      const bool slope_ok = next.gradient.dot(ev.gradient) >= kArmijo * gnorm * gnorm;
      if (value_ok || slope_ok) {
        mu = trial;
        ev = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw OracleError("dual ascent line search failed to make progress",
                        assemble(hubs, mu, ev, it));
    }
    if (mu.norm() > kRunawayMultiplier) {
      std::ostringstream msg;
      msg << "aggregate coupling infeasible: multiplier diverged with residual ("
          << ev.gradient[0] << ", " << ev.gradient[1] << ")";
      throw ModelError(msg.str());
    }
  }
  throw OracleError("dual ascent reached the iteration cap",
                    assemble(hubs, mu, ev, opts.max_iterations));
}

double global_welfare(std::span<const HubParameters> hubs,
                      std::span<const EnergyVector> r,
                      std::span<const ExtendedDecision> u, double tol) {
  if (r.size() != hubs.size() || u.size() != hubs.size()) {
    throw std::invalid_argument("global_welfare: one allocation per hub expected");
  }
  std::ostringstream violations;
  bool feasible = true;
  double f = 0.0;
  for (std::size_t i = 0; i < hubs.size(); ++i) {
    for (const auto& v : omega_violations(hubs[i], r[i], u[i], tol)) {
      violations << (feasible ? "" : "; ") << "node " << i + 1 << ": " << v;
      feasible = false;
    }
    const auto ops = CouplingOperators::from(hubs[i].efficiencies);
    f += cost(hubs[i], r[i]) - utility(hubs[i], ops.M1 * u[i]);
  }
  if (!feasible) throw ModelError("infeasible allocation: " + violations.str());
  return f;
}

}  // namespace mesh_dispatch
