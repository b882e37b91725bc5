#include <doctest.h>

#include <cmath>

#include "mesh_dispatch/casegen.hpp"
#include "mesh_dispatch/oracle.hpp"

#include "../support/oracles.hpp"

using namespace mesh_dispatch;
namespace mt = mesh_dispatch::testing;

namespace {

const CentralSolution& ieee14_solution() {
  static const CentralSolution sol = solve_centralized(ieee14_case().hubs);
  return sol;
}

EnergyVector coupling(std::span<const HubParameters> hubs, std::span<const EnergyVector> r,
                      std::span<const ExtendedDecision> u) {
  EnergyVector sum = EnergyVector::Zero();
  for (std::size_t i = 0; i < hubs.size(); ++i) {
    sum += r[i] - CouplingOperators::from(hubs[i].efficiencies).M * u[i];
  }
  return sum;
}

// Brute-force welfare minimum for two hubs. Coordinates: r1 and the three
// supply ports of each hub; r2 is fixed by the coupling equality.
double two_hub_grid(const std::vector<HubParameters>& hubs) {
  using Vec8 = Eigen::Matrix<double, 8, 1>;
  const auto p1 = reduced_polytope(hubs[0]);
  const auto p2 = reduced_polytope(hubs[1]);
  auto value = [&](const Vec8& v, bool& ok) {
    ReducedPoint x1, x2;
    x1 << v[0], v[1], v[2], v[3], v[4];
    const double total_e = v[2] + v[5];
    const double total_g = v[3] + v[4] + v[6] + v[7];
    x2 << total_e - v[0], total_g - v[1], v[5], v[6], v[7];
    ok = mt::reduced_feasible(p1, x1) && mt::reduced_feasible(p2, x2);
    if (!ok) return 0.0;
    EnergyVector r1, r2;
    ExtendedDecision u1, u2;
    expand(hubs[0].efficiencies, x1, r1, u1);
    expand(hubs[1].efficiencies, x2, r2, u2);
    return cost(hubs[0], r1) - utility(hubs[0], recover(u1).d) + cost(hubs[1], r2) -
           utility(hubs[1], recover(u2).d);
  };
  Vec8 lo, hi;
  lo << hubs[0].r_lo, hubs[0].s_lo[0], 0.0, 0.0, hubs[1].s_lo[0], 0.0, 0.0;
  hi << hubs[0].r_hi, hubs[0].s_hi[0], hubs[0].s_hi[1], hubs[0].s_hi[1], hubs[1].s_hi[0],
      hubs[1].s_hi[1], hubs[1].s_hi[1];

  double best = std::numeric_limits<double>::infinity();
  Vec8 best_x = lo;
  auto scan = [&](const Vec8& a, const Vec8& b, int pts) {
    int total = 1;
    for (int d = 0; d < 8; ++d) total *= pts;
    for (int flat = 0; flat < total; ++flat) {
      int rem = flat;
      Vec8 x;
      for (int d = 0; d < 8; ++d) {
        x[d] = a[d] + (b[d] - a[d]) * (rem % pts) / (pts - 1);
        rem /= pts;
      }
      bool ok = false;
      const double v = value(x, ok);
      if (ok && v < best) best = v, best_x = x;
    }
  };
  scan(lo, hi, 7);
  Vec8 half = (hi - lo) / 6.0;
  for (int level = 0; level < 60; ++level) {
    scan((best_x - half).cwiseMax(lo), (best_x + half).cwiseMin(hi), 5);
    half *= 0.8;
  }
  return best;
}

}  // namespace

TEST_CASE("14-bus oracle solution is feasible and dual-consistent") {
  const auto& sol = ieee14_solution();
  const auto hubs = ieee14_case().hubs;
  CHECK(std::isfinite(sol.F_star));
  CHECK(coupling(hubs, sol.r_star, sol.u_star).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(sol.omega_violation <= 1e-8);
  // Strong duality.
  CHECK(std::abs(sol.dual_value - sol.F_star) <= 10 * kOracleTol);
  CHECK(global_welfare(hubs, sol.r_star, sol.u_star) == doctest::Approx(sol.F_star));
}

TEST_CASE("dual probes never exceed the dual optimum") {
  const auto& sol = ieee14_solution();
  const auto hubs = ieee14_case().hubs;
  Rng rng(21);
  for (int k = 0; k < 20; ++k) {
    const EnergyVector mu = sol.mu_star + EnergyVector{rng.uniform(-3.0, 3.0),
                                                       rng.uniform(-3.0, 3.0)};
    const auto q = dual_function(hubs, mu, kDefaultInnerTol);
    CHECK(q.value <= sol.dual_value + 1e-6);
    // Weak duality.
    CHECK(q.value <= sol.F_star + 1e-6);
  }
  // The Lagrangian at the primal solution is flat in mu because the
  // coupling holds: L(x*, mu) = F* + mu^T (sum r - M u).
  const EnergyVector c = coupling(hubs, sol.r_star, sol.u_star);
  for (int k = 0; k < 5; ++k) {
    const EnergyVector mu{rng.uniform(-20.0, 0.0), rng.uniform(-20.0, 0.0)};
    CHECK(sol.F_star + mu.dot(c) <= sol.F_star + mu.norm() * 1e-6 + 1e-9);
  }
}

TEST_CASE("oracle beats random feasible coupled allocations") {
  const auto& sol = ieee14_solution();
  const auto hubs = ieee14_case().hubs;
  Rng rng(8);
  int compared = 0;
  for (int k = 0; k < 100; ++k) {
    const auto alloc = mt::sample_coupled(hubs, rng);
    REQUIRE(alloc);
    CHECK(coupling(hubs, alloc->first, alloc->second).norm() <= 1e-8);
    const double f = global_welfare(hubs, alloc->first, alloc->second, 1e-8);
    CHECK(sol.F_star <= f + 1e-9);
    ++compared;
  }
  CHECK(compared == 100);
}

TEST_CASE("two identical hubs receive identical allocations") {
  const auto hub = ieee14_case().hubs[4];
  const std::vector<HubParameters> hubs{hub, hub};
  const auto sol = solve_centralized(hubs);
  CHECK((sol.r_star[0] - sol.r_star[1]).norm() <= 1e-6);
  CHECK((sol.u_star[0] - sol.u_star[1]).norm() <= 1e-6);
}

TEST_CASE("two-hub truncation agrees with a brute-force grid") {
  const auto all = ieee14_case().hubs;
  const std::vector<HubParameters> hubs{all[0], all[1]};
  const auto sol = solve_centralized(hubs);
  const double grid = two_hub_grid(hubs);
  // The grid value is attained by a feasible point: the oracle cannot be
  // worse, and a fine grid gets close to it.
  CHECK(sol.F_star <= grid + 1e-6);
  CHECK(grid - sol.F_star <= 1e-2 * std::abs(sol.F_star));
}

TEST_CASE("single hub oracle matches the grid") {
  // With one hub the coupling fixes r = M u, leaving a 3-dim search over
  // (s_e, s_g, gas split).
  const auto hub = ieee14_case().hubs[2];
  const std::vector<HubParameters> hubs{hub};
  const auto sol = solve_centralized(hubs);
  const auto poly = reduced_polytope(hub);
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= 400; ++a) {
    for (int b = 0; b <= 400; ++b) {
      // r = M u: r_e = u1, r_g = u2 + u3; split gas by c.
      const double u1 = hub.s_lo[0] + (hub.s_hi[0] - hub.s_lo[0]) * a / 400.0;
      const double sg = hub.s_lo[1] + (hub.s_hi[1] - hub.s_lo[1]) * b / 400.0;
      for (int c = 0; c <= 20; ++c) {
        ReducedPoint x;
        x << u1, sg, u1, sg * c / 20.0, sg * (20 - c) / 20.0;
        if (!mt::reduced_feasible(poly, x)) continue;
        EnergyVector r;
        ExtendedDecision u;
        expand(hub.efficiencies, x, r, u);
        best = std::min(best, cost(hub, r) - utility(hub, recover(u).d));
      }
    }
  }
  CHECK(sol.F_star <= best + 1e-6);
  CHECK(best - sol.F_star <= 0.5);
}

TEST_CASE("empty hub list and infeasible aggregate") {
  CHECK_THROWS_AS(solve_centralized(std::vector<HubParameters>{}), ModelError);
  // A lone hub whose purchases are pinned at 10 pu but whose supply floor
  // is 40 pu electricity: every local point is fine, the coupling is not.
  auto hub = ieee14_case().hubs[1];
  hub.r_lo = hub.r_hi = EnergyVector{10.0, 10.0};
  hub.s_lo = EnergyVector{40.0, 20.0};
  CHECK_THROWS_AS(solve_centralized(std::vector<HubParameters>{hub}), ModelError);
}

TEST_CASE("global welfare") {
  auto hub = ieee14_case().hubs[9];  // zero lower bounds
  const std::vector<HubParameters> one{hub};
  const std::vector<EnergyVector> r0{EnergyVector::Zero()};
  const std::vector<ExtendedDecision> u0{ExtendedDecision::Zero()};
  CHECK(global_welfare(one, r0, u0) == doctest::Approx(hub.constant));

  const std::vector<EnergyVector> bad_r{EnergyVector{-5.0, 0.0}};
  CHECK_THROWS_AS(global_welfare(one, bad_r, u0), ModelError);
  try {
    global_welfare(one, bad_r, u0);
  } catch (const ModelError& ex) {
    CHECK(std::string(ex.what()).find("node 1") != std::string::npos);
  }

  // Permuting identical hubs leaves F unchanged.
  const std::vector<HubParameters> two{hub, hub};
  const auto ua = compose_decision(hub.efficiencies, {20.0, 30.0}, 0.4);
  const auto ub = compose_decision(hub.efficiencies, {30.0, 50.0}, 0.7);
  const std::vector<EnergyVector> r{EnergyVector{10.0, 20.0}, EnergyVector{30.0, 40.0}};
  const std::vector<EnergyVector> r_swapped{r[1], r[0]};
  const std::vector<ExtendedDecision> u{ua, ub}, u_swapped{ub, ua};
  CHECK(global_welfare(two, r, u) == doctest::Approx(global_welfare(two, r_swapped, u_swapped)));
}
