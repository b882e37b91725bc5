#pragma once

// Independent reference computations used only by the tests: a brute-force
// grid search over the reduced polytope, central finite differences, random
// subproblem generation and a random feasible-allocation sampler. None of
// these go through the interior-point solver.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "mesh_dispatch/casegen.hpp"
#include "mesh_dispatch/local_solver.hpp"
#include "mesh_dispatch/rng.hpp"

namespace mesh_dispatch::testing {

inline bool reduced_feasible(const ReducedPolytope& poly, const ReducedPoint& x) {
  return ((poly.G * x) - poly.h).maxCoeff() <= 0.0;
}

inline double reduced_objective(const Subproblem& sp, const ReducedPoint& x) {
  EnergyVector r;
  ExtendedDecision u;
  expand(sp.hub.efficiencies, x, r, u);
  return subproblem_objective(sp, r, u);
}

struct GridResult {
  bool found = false;
  ReducedPoint x = ReducedPoint::Zero();
  double value = std::numeric_limits<double>::infinity();
};

/// Dense grid over the bounding box of the reduced polytope, then repeated
/// refinement on a shrinking box around the incumbent. Only exactly feasible
/// grid points are scored, so the returned value is an upper bound on the
/// true minimum.
inline GridResult grid_minimize(const Subproblem& sp, int coarse = 9, int fine = 7,
                                int levels = 40) {
  const auto poly = reduced_polytope(sp.hub);
  const auto& h = sp.hub;
  ReducedPoint lo, hi;
  lo << h.r_lo[0], h.r_lo[1], h.s_lo[0], 0.0, 0.0;
  hi << h.r_hi[0], h.r_hi[1], h.s_hi[0], h.s_hi[1], h.s_hi[1];

  GridResult best;
  auto scan = [&](const ReducedPoint& a, const ReducedPoint& b, int pts) {
    std::array<int, 5> idx{};
    const int total = static_cast<int>(std::pow(pts, 5));
    for (int flat = 0; flat < total; ++flat) {
      int rem = flat;
      for (int d = 0; d < 5; ++d) {
        idx[d] = rem % pts;
        rem /= pts;
      }
      ReducedPoint x;
      for (int d = 0; d < 5; ++d) {
        x[d] = pts == 1 ? a[d] : a[d] + (b[d] - a[d]) * idx[d] / (pts - 1);
      }
      if (!reduced_feasible(poly, x)) continue;
      const double v = reduced_objective(sp, x);
      if (v < best.value) {
        best = {true, x, v};
      }
    }
  };

  for (int pts = coarse; !best.found && pts <= 4 * coarse; pts *= 2) scan(lo, hi, pts);
  if (!best.found) return best;

  ReducedPoint half = (hi - lo) / (coarse - 1);
  for (int level = 0; level < levels; ++level) {
    const ReducedPoint a = (best.x - half).cwiseMax(lo);
    const ReducedPoint b = (best.x + half).cwiseMin(hi);
    scan(a, b, fine);
    half *= 0.6;
  }
  return best;
}

/// Random single-hub subproblem: a hub from the random case generator and
/// anchors, trackers and multipliers in ranges seen during real runs.
inline Subproblem random_subproblem(std::uint64_t seed) {
  Rng rng(seed);
  Subproblem sp;
  sp.hub = random_case(1, seed).hubs.front();
  sp.rho = std::exp(rng.uniform(std::log(0.01), std::log(5.0)));
  const auto& h = sp.hub;
  sp.r_anchor = {rng.uniform(h.r_lo[0], h.r_hi[0]), rng.uniform(h.r_lo[1], h.r_hi[1])};
  const EnergyVector s{rng.uniform(h.s_lo[0], h.s_hi[0]), rng.uniform(h.s_lo[1], h.s_hi[1])};
  sp.u_anchor = compose_decision(h.efficiencies, s, rng.uniform());
  sp.sigma = {rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
  sp.phi = {rng.uniform(-15.0, 0.0), rng.uniform(-15.0, 0.0)};
  return sp;
}

/// Central differences of the subproblem objective in the full (r, u)
/// coordinates, treating all seven entries as independent.
inline FullGradient fd_gradient(const Subproblem& sp, const EnergyVector& r,
                                const ExtendedDecision& u) {
  FullGradient g;
  for (int k = 0; k < 7; ++k) {
    EnergyVector rp = r, rm = r;
    ExtendedDecision up = u, um = u;
    const double base = k < 2 ? r[k] : u[k - 2];
    const double step = 1e-5 * std::max(1.0, std::abs(base));
    if (k < 2) {
      rp[k] += step;
      rm[k] -= step;
    } else {
      up[k - 2] += step;
      um[k - 2] -= step;
    }
    g[k] = (subproblem_objective(sp, rp, up) - subproblem_objective(sp, rm, um)) / (2 * step);
  }
  return g;
}

/// Rejection sample of a point of the hub's feasible set.
inline std::optional<std::pair<EnergyVector, ExtendedDecision>> sample_feasible(
    const HubParameters& hub, Rng& rng, int attempts = 100000) {
  const auto poly = reduced_polytope(hub);
  for (int a = 0; a < attempts; ++a) {
    ReducedPoint x;
    x << rng.uniform(hub.r_lo[0], hub.r_hi[0]), rng.uniform(hub.r_lo[1], hub.r_hi[1]),
        rng.uniform(hub.s_lo[0], hub.s_hi[0]), rng.uniform(0.0, hub.s_hi[1]),
        rng.uniform(0.0, hub.s_hi[1]);
    if (!reduced_feasible(poly, x)) continue;
    EnergyVector r;
    ExtendedDecision u;
    expand(hub.efficiencies, x, r, u);
    return std::make_pair(r, u);
  }
  return std::nullopt;
}

/// Random allocation that satisfies every local set and the aggregate
/// coupling sum r = sum M u: the u's are sampled, then the r's are placed
/// inside their boxes to meet the totals.
inline std::optional<std::pair<std::vector<EnergyVector>, std::vector<ExtendedDecision>>>
sample_coupled(std::span<const HubParameters> hubs, Rng& rng, int attempts = 200) {
  const int n = static_cast<int>(hubs.size());
  for (int a = 0; a < attempts; ++a) {
    std::vector<EnergyVector> r(n);
    std::vector<ExtendedDecision> u(n);
    EnergyVector total = EnergyVector::Zero();
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      auto s = sample_feasible(hubs[i], rng);
      if (!s) {
        ok = false;
        break;
      }
      u[i] = s->second;
      total += EnergyVector{u[i][0], u[i][1] + u[i][2]};
    }
    if (!ok) continue;
    for (int c = 0; c < 2 && ok; ++c) {
      std::vector<double> w(n), base(n), width(n);
      double lo_sum = 0.0, hi_sum = 0.0;
      for (int i = 0; i < n; ++i) {
        base[i] = hubs[i].r_lo[c];
        width[i] = hubs[i].r_hi[c] - hubs[i].r_lo[c];
        w[i] = rng.uniform(0.05, 1.0);
        lo_sum += base[i];
        hi_sum += hubs[i].r_hi[c];
      }
      if (total[c] < lo_sum || total[c] > hi_sum) {
        ok = false;
        break;
      }
      // r_i = lo_i + width_i * min(1, k w_i); bisection on k for the total.
      auto sum_at = [&](double k) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += base[i] + width[i] * std::min(1.0, k * w[i]);
        return acc;
      };
      double klo = 0.0, khi = 1e6;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (klo + khi);
        (sum_at(mid) < total[c] ? klo : khi) = mid;
      }
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        r[i][c] = base[i] + width[i] * std::min(1.0, khi * w[i]);
        acc += r[i][c];
      }
      // Put the rounding remainder on a node with room.
      const double rem = total[c] - acc;
      for (int i = 0; i < n; ++i) {
        const double v = r[i][c] + rem;
        if (v >= hubs[i].r_lo[c] && v <= hubs[i].r_hi[c]) {
          r[i][c] = v;
          break;
        }
      }
    }
    if (ok) return std::make_pair(r, u);
  }
  return std::nullopt;
}

}  // namespace mesh_dispatch::testing
