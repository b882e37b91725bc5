#include <doctest.h>

#include "mesh_dispatch/casegen.hpp"
#include "mesh_dispatch/local_solver.hpp"

#include "../support/oracles.hpp"

using namespace mesh_dispatch;
namespace mt = mesh_dispatch::testing;

namespace {

Eigen::Matrix<double, 7, 1> stack(const EnergyVector& r, const ExtendedDecision& u) {
  Eigen::Matrix<double, 7, 1> v;
  v << r, u;
  return v;
}

Subproblem node1_subproblem() {
  Subproblem sp;
  sp.hub = ieee14_case().hubs.front();
  sp.rho = 0.1;
  sp.r_anchor = {40.0, 50.0};
  sp.u_anchor = compose_decision(sp.hub.efficiencies, {50.0, 80.0}, 0.5);
  return sp;
}

}  // namespace

TEST_CASE("node 1 subproblem matches the brute-force grid") {
  auto sp = node1_subproblem();
  // Generous bounds.
  sp.hub.r_lo = sp.hub.s_lo = sp.hub.d_lo = EnergyVector::Zero();
  sp.hub.r_hi = sp.hub.s_hi = sp.hub.d_hi = EnergyVector::Constant(200.0);
  const auto sol = solve_local(sp);
  const auto grid = mt::grid_minimize(sp);
  REQUIRE(grid.found);
  const double obj = subproblem_objective(sp, sol.r, sol.u);
  CHECK(obj <= grid.value + 1e-3);
  CHECK(sol.kkt_residual <= 1e-8);
  CHECK(in_omega(sp.hub, sol.r, sol.u, 1e-9));
  // The grid point is a feasible point too, so the solver cannot be worse.
  CHECK(grid.value >= obj - 1e-9);
  CHECK(kkt_residual(sp, sol.r, sol.u) <= 1e-8);
}

TEST_CASE("random subproblems: objective, KKT and feasibility") {
  for (int k = 0; k < 10; ++k) {
    const auto sp = mt::random_subproblem(100 + k);
    const auto sol = solve_local(sp);
    const auto grid = mt::grid_minimize(sp, 7, 5, 30);
    REQUIRE(grid.found);
    CHECK(subproblem_objective(sp, sol.r, sol.u) <= grid.value + 1e-3);
    CHECK(kkt_residual(sp, sol.r, sol.u) <= 1e-8);
    CHECK(in_omega(sp.hub, sol.r, sol.u, 1e-8));
  }
}

TEST_CASE("variational inequality at the solution") {
  // For convex f over a convex set, grad f(x*) . (y - x*) >= 0 for feasible y.
  for (int k = 0; k < 10; ++k) {
    const auto sp = mt::random_subproblem(300 + k);
    const auto sol = solve_local(sp);
    const auto g = subproblem_gradient(sp, sol.r, sol.u);
    Rng rng(k);
    const double scale = std::max(1.0, g.norm());
    for (int j = 0; j < 200; ++j) {
      const auto y = mt::sample_feasible(sp.hub, rng);
      REQUIRE(y);
      const double dir = g.dot(stack(y->first, y->second) - stack(sol.r, sol.u));
      CHECK(dir >= -1e-7 * scale);
    }
  }
}

TEST_CASE("active upper bound is hit exactly") {
  // The oracle inner problem separates r_e: min a1 r^2 + a2 r + mu_e r with
  // unconstrained minimizer -(a2 + mu_e) / (2 a1) = 36.36 for node 1 at
  // mu_e = -20. Clipping to r_hi = 30 must land on the bound.
  auto hub = ieee14_case().hubs.front();
  hub.r_hi[0] = 30.0;
  const EnergyVector mu{-20.0, -8.0};
  const auto sol = minimize_lagrangian(hub, mu);
  CHECK(sol.r[0] == 30.0);
  // Derivative of the r_e part is negative at the bound: the upper-bound
  // multiplier is positive.
  CHECK(hub.cost_e.derivative(30.0) + mu[0] < 0.0);

  hub.r_hi[0] = 50.0;
  const auto free = minimize_lagrangian(hub, mu);
  CHECK(free.r[0] == doctest::Approx((20.0 - 12.0) / 0.22).epsilon(1e-9));
}

TEST_CASE("large penalty pins the solution near the anchors") {
  auto sp = node1_subproblem();
  sp.r_anchor = {40.0, 50.0};
  double previous = 1e300;
  for (double rho : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    sp.rho = rho;
    const auto sol = solve_local(sp);
    const auto ops = CouplingOperators::from(sp.hub.efficiencies);
    const double dist = ((sol.r - sp.r_anchor) - ops.M * (sol.u - sp.u_anchor)).norm();
    CHECK(dist <= previous + 1e-9);
    previous = dist;
    CHECK((ops.B_bar * sol.u - ops.M1 * sol.u).norm() <= 1e-9);
  }
  CHECK(previous < 0.5);
}

TEST_CASE("KKT residual at an interior point is the reduced gradient norm") {
  const auto sp = node1_subproblem();
  ReducedPoint x;
  x << 40.0, 50.0, 50.0, 40.0, 40.0;
  const auto poly = reduced_polytope(sp.hub);
  REQUIRE(((poly.G * x) - poly.h).maxCoeff() < -1.0);
  ReducedPoint g;
  for (int k = 0; k < 5; ++k) {
    ReducedPoint a = x, b = x;
    a[k] += 1e-4;
    b[k] -= 1e-4;
    g[k] = (mt::reduced_objective(sp, a) - mt::reduced_objective(sp, b)) / 2e-4;
  }
  EnergyVector r;
  ExtendedDecision u;
  expand(sp.hub.efficiencies, x, r, u);
  const double res = kkt_residual(sp, r, u);
  CHECK(res > 0.0);
  CHECK(res == doctest::Approx(g.norm()).epsilon(1e-6));
}

TEST_CASE("KKT residual at the grid optimum is small") {
  const auto sp = mt::random_subproblem(77);
  const auto grid = mt::grid_minimize(sp);
  REQUIRE(grid.found);
  EnergyVector r;
  ExtendedDecision u;
  expand(sp.hub.efficiencies, grid.x, r, u);
  CHECK(kkt_residual(sp, r, u) <= 1e-3);
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto sp = mt::random_subproblem(500 + k);
    const auto pt = mt::sample_feasible(sp.hub, rng);
    REQUIRE(pt);
    const auto g = subproblem_gradient(sp, pt->first, pt->second);
    const auto fd = mt::fd_gradient(sp, pt->first, pt->second);
    CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("empty feasible set is a model error") {
  auto sp = node1_subproblem();
  // Demand floor above anything the supply box can deliver.
  sp.hub.d_lo = EnergyVector{500.0, 500.0};
  sp.hub.d_hi = EnergyVector{600.0, 600.0};
  CHECK_FALSE(omega_nonempty(sp.hub));
  CHECK_THROWS_AS(solve_local(sp), ModelError);
  CHECK(omega_nonempty(ieee14_case().hubs.front()));
}

TEST_CASE("zero-width boxes and fixed points") {
  auto sp = node1_subproblem();
  sp.hub.r_lo = sp.hub.r_hi = EnergyVector{40.0, 50.0};
  const auto sol = solve_local(sp);
  CHECK(sol.r[0] == 40.0);
  CHECK(sol.r[1] == 50.0);
}
