#include "mesh_dispatch/local_solver.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace mesh_dispatch {

namespace {

using FullMatrix = Eigen::Matrix<double, 7, 7>;
using Embedding = Eigen::Matrix<double, 7, 5>;

// Maps reduced x = (r, u1, u2, u3) to the full (r, u) with u4, u5 = B u_ports.
Embedding embedding(const EfficiencySet& eff) {
  const auto ops = CouplingOperators::from(eff);
  Embedding t = Embedding::Zero();
  t.topLeftCorner<5, 5>().setIdentity();
  t.block<2, 3>(5, 2) = ops.B;
  return t;
}

// Gradient of -U(d); the utility stores gamma1 as a positive c2.
EnergyVector demand_gradient(const HubParameters& hub, const EnergyVector& d) {
  EnergyVector g{2.0 * hub.util_e.c2 * d[0] - hub.util_e.c1,
                 2.0 * hub.util_g.c2 * d[1] - hub.util_g.c1};
  if (hub.taguchi_theta && hub.d_hat) {
    g += 2.0 * *hub.taguchi_theta * (d - *hub.d_hat);
  }
  return g;
}

bool port_block_degenerate(const HubParameters& hub, double rho) {
  return rho <= 0.0 || hub.util_e.c2 <= 0.0 || hub.util_g.c2 <= 0.0;
}

// Interior point on a ridged copy when the port block is only semidefinite;
// the final face solve uses the exact Hessian whenever it is nonsingular.
qp::Result solve_reduced(const HubParameters& hub, double rho,
                         const qp::Problem& exact) {
  if (!port_block_degenerate(hub, rho)) return qp::solve(exact);
  qp::Problem ridged = exact;
  ridged.Q(3, 3) += kPortRidge;
  ridged.Q(4, 4) += kPortRidge;
  qp::Options opts;
  opts.polish_Q = exact.Q;
  return qp::solve(ridged, opts);
}

LocalSolution finish(const Subproblem& sp, const qp::Result& res) {
  LocalSolution out;
  expand(sp.hub.efficiencies, res.x, out.r, out.u);
  out.objective = subproblem_objective(sp, out.r, out.u);
  out.kkt_residual = kkt_residual(sp, out.r, out.u);
  return out;
}

}  // namespace

double subproblem_objective(const Subproblem& sp, const EnergyVector& r,
                            const ExtendedDecision& u) {
  const auto ops = CouplingOperators::from(sp.hub.efficiencies);
  const EnergyVector mu_term = r - ops.M * u;
  const EnergyVector w =
      (r - sp.r_anchor) - ops.M * (u - sp.u_anchor) + sp.sigma;
  return cost(sp.hub, r) - utility(sp.hub, ops.M1 * u) + sp.phi.dot(mu_term) +
         0.5 * sp.rho * w.squaredNorm();
}

FullGradient subproblem_gradient(const Subproblem& sp, const EnergyVector& r,
                                 const ExtendedDecision& u) {
  const auto ops = CouplingOperators::from(sp.hub.efficiencies);
  const EnergyVector w =
      (r - sp.r_anchor) - ops.M * (u - sp.u_anchor) + sp.sigma;
  FullGradient g;
  g.head<2>() = EnergyVector{sp.hub.cost_e.derivative(r[0]),
                             sp.hub.cost_g.derivative(r[1])} +
                sp.phi + sp.rho * w;
  g.tail<5>() = ops.M1.transpose() * demand_gradient(sp.hub, ops.M1 * u) -
                ops.M.transpose() * sp.phi -
                sp.rho * ops.M.transpose() * w;
  return g;
}

ReducedPoint reduce(const EnergyVector& r, const ExtendedDecision& u) {
  ReducedPoint x;
  x << r, u.head<3>();
  return x;
}

void expand(const EfficiencySet& eff, const ReducedPoint& x, EnergyVector& r,
            ExtendedDecision& u) {
  const auto ops = CouplingOperators::from(eff);
  r = x.head<2>();
  u.head<3>() = x.tail<3>();
  u.tail<2>() = ops.B * x.tail<3>();
}

ReducedPolytope reduced_polytope(const HubParameters& hub) {
  const auto ops = CouplingOperators::from(hub.efficiencies);
  ReducedPolytope p;
  p.G.setZero();
  p.G(0, 0) = 1;
  p.h[0] = hub.r_hi[0];
  p.G(1, 0) = -1;
  p.h[1] = -hub.r_lo[0];
  p.G(2, 1) = 1;
  p.h[2] = hub.r_hi[1];
  p.G(3, 1) = -1;
  p.h[3] = -hub.r_lo[1];
  p.G(4, 2) = 1;
  p.h[4] = hub.s_hi[0];
  p.G(5, 2) = -1;
  p.h[5] = -hub.s_lo[0];
  p.G(6, 3) = p.G(6, 4) = 1;
  p.h[6] = hub.s_hi[1];
  p.G(7, 3) = p.G(7, 4) = -1;
  p.h[7] = -hub.s_lo[1];
  p.G.block<1, 3>(8, 2) = ops.B.row(0);
  p.h[8] = hub.d_hi[0];
  p.G.block<1, 3>(9, 2) = -ops.B.row(0);
  p.h[9] = -hub.d_lo[0];
  p.G.block<1, 3>(10, 2) = ops.B.row(1);
  p.h[10] = hub.d_hi[1];
  p.G.block<1, 3>(11, 2) = -ops.B.row(1);
  p.h[11] = -hub.d_lo[1];
  p.G(12, 3) = -1;
  p.h[12] = 0;
  p.G(13, 4) = -1;
  p.h[13] = 0;
  return p;
}

bool omega_nonempty(const HubParameters& hub) {
  const auto poly = reduced_polytope(hub);
  return qp::feasible(poly.G, poly.h);
}

qp::Problem reduced_qp(const HubParameters& hub, double rho,
                       const EnergyVector& phi, const EnergyVector& offset) {
  const auto ops = CouplingOperators::from(hub.efficiencies);
  FullMatrix h = FullMatrix::Zero();
  Eigen::Matrix<double, 7, 1> g = Eigen::Matrix<double, 7, 1>::Zero();

  h(0, 0) = 2.0 * hub.cost_e.c2;
  h(1, 1) = 2.0 * hub.cost_g.c2;
  g[0] = hub.cost_e.c1;
  g[1] = hub.cost_g.c1;

  const double theta = hub.taguchi_theta.value_or(0.0);
  h(5, 5) = 2.0 * (hub.util_e.c2 + theta);
  h(6, 6) = 2.0 * (hub.util_g.c2 + theta);
  g[5] = -hub.util_e.c1;
  g[6] = -hub.util_g.c1;
  if (hub.taguchi_theta && hub.d_hat) {
    g.tail<2>() -= 2.0 * theta * *hub.d_hat;
  }

  g.head<2>() += phi;
  g.segment<5>(2) -= ops.M.transpose() * phi;

  // Proximal term (rho / 2) || J z + offset ||^2 with J = [I, -M].
  Eigen::Matrix<double, 2, 7> j;
  j << Eigen::Matrix2d::Identity(), -ops.M;
  h += rho * j.transpose() * j;
  g += rho * j.transpose() * offset;

  const Embedding t = embedding(hub.efficiencies);
  const auto poly = reduced_polytope(hub);
  qp::Problem p;
  p.Q = t.transpose() * h * t;
  p.q = t.transpose() * g;
  p.G = poly.G;
  p.h = poly.h;
  return p;
}

double kkt_residual(const Subproblem& sp, const EnergyVector& r,
                    const ExtendedDecision& u, double active_tol) {
  const Embedding t = embedding(sp.hub.efficiencies);
  const ReducedPoint x = reduce(r, u);
  const ReducedPoint g = t.transpose() * subproblem_gradient(sp, r, u);
  const auto poly = reduced_polytope(sp.hub);

  std::vector<int> active;
  for (int i = 0; i < poly.G.rows(); ++i) {
    const double slack = poly.h[i] - poly.G.row(i).dot(x);
    if (slack <= active_tol * std::max(1.0, std::abs(poly.h[i]))) active.push_back(i);
  }
  // Minimum-norm element of g + G_A^T z over z >= 0: the projection of -g
  // onto the tangent cone, up to sign. Some optimal z is supported on
  // linearly independent rows, so every such support is tried.
  double best = g.norm();
  const int na = static_cast<int>(active.size());
  for (unsigned mask = 1; mask < (1u << na); ++mask) {
    std::vector<int> rows;
    for (int k = 0; k < na; ++k) {
      if (mask & (1u << k)) rows.push_back(active[k]);
    }
    if (rows.size() > 5) continue;
    Eigen::MatrixXd a(rows.size(), 5);
    for (std::size_t k = 0; k < rows.size(); ++k) a.row(k) = poly.G.row(rows[k]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-10);
    if (lu.rank() < static_cast<Eigen::Index>(rows.size())) continue;
    const Eigen::VectorXd z = (a * a.transpose()).ldlt().solve(-a * g);
    if (z.minCoeff() < 0.0) continue;
    best = std::min(best, (g + a.transpose() * z).norm());
  }
  return best;
}

LocalSolution solve_local(const Subproblem& sp, double tol) {
  if (!(sp.rho > 0.0)) throw DomainError("rho must be positive");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (!sp.r_anchor.allFinite() || !sp.u_anchor.allFinite() ||
      !sp.sigma.allFinite() || !sp.phi.allFinite()) {
    throw DomainError("subproblem anchors must be finite");
  }
  if (!omega_nonempty(sp.hub)) {
    throw ModelError("local feasible set is empty");
  }
  const auto ops = CouplingOperators::from(sp.hub.efficiencies);
  const EnergyVector offset = -sp.r_anchor + ops.M * sp.u_anchor + sp.sigma;
  const auto problem = reduced_qp(sp.hub, sp.rho, sp.phi, offset);
  const auto res = solve_reduced(sp.hub, sp.rho, problem);
  LocalSolution out = finish(sp, res);
  if (res.status != qp::Status::Solved || !(out.kkt_residual <= tol)) {
    std::ostringstream msg;
    msg << "local solve stopped with KKT residual " << out.kkt_residual
        << " after " << res.iterations << " iterations";
    throw ConvergenceError(msg.str(), out);
  }
  return out;
}

LocalSolution minimize_lagrangian(const HubParameters& hub,
                                  const EnergyVector& mu, double tol) {
  if (!omega_nonempty(hub)) {
    throw ModelError("local feasible set is empty");
  }
  Subproblem sp;
  sp.hub = hub;
  sp.rho = 0.0;
  sp.phi = mu;
  const auto problem = reduced_qp(hub, 0.0, mu, EnergyVector::Zero());
  const auto res = solve_reduced(hub, 0.0, problem);
  LocalSolution out = finish(sp, res);
  if (res.status != qp::Status::Solved || !(out.kkt_residual <= tol)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "Lagrangian minimization at mu = (" << mu[0] << ", " << mu[1]
        << ") stopped with KKT residual " << out.kkt_residual;
    throw ConvergenceError(msg.str(), out);
  }
  return out;
}

}  // namespace mesh_dispatch
