#include "mesh_dispatch/casegen.hpp"

#include <array>

#include "mesh_dispatch/local_solver.hpp"
#include "mesh_dispatch/rng.hpp"

namespace mesh_dispatch {

namespace {

constexpr int kIeee14Nodes = 14;
constexpr double kTableUnit = 10.0;  // table bounds are listed in 10 pu

struct Ieee14Row {
  double a1e, a2e, a1g, a2g;
  double g1e, g2e, g1g, g2g;
  double constant;
  double lo_e, hi_e, lo_g, hi_g;
};

// clang-format off
constexpr std::array<Ieee14Row, kIeee14Nodes> kIeee14Table{{
  {0.11, 12.0, 0.033, 5.6, 0.13, 7.2, 0.023, 3.4, 0.57, 2, 9, 3, 10},
  {0.05, 13.5, 0.042, 5.0, 0.14, 7.3, 0.024, 3.3, 0.33, 4, 15, 2, 16},
  {0.08, 11.5, 0.033, 5.5, 0.11, 8.5, 0.030, 4.5, 0.50, 1, 10, 1, 12},
  {0.03, 12.5, 0.021, 6.6, 0.09, 7.4, 0.028, 3.7, 0.58, 2, 14, 2, 14},
  {0.06, 11.7, 0.034, 5.7, 0.15, 7.7, 0.015, 3.8, 0.21, 2, 14, 3, 16},
  {0.07, 11.9, 0.025, 5.5, 0.16, 8.1, 0.017, 4.1, 0.24, 3, 15, 4, 17},
  {0.04, 12.6, 0.028, 5.3, 0.10, 8.2, 0.020, 3.2, 0.72, 3, 15, 3, 15},
  {0.12, 12.8, 0.036, 6.1, 0.12, 7.9, 0.022, 3.9, 0.15, 4, 16, 3, 16},
  {0.11, 11.6, 0.030, 6.4, 0.13, 8.0, 0.016, 4.3, 0.78, 2, 15, 2, 14},
  {0.06, 13.3, 0.029, 6.0, 0.08, 7.5, 0.018, 3.6, 0.22, 0, 9, 0, 10},
  {0.09, 13.2, 0.023, 5.8, 0.11, 7.6, 0.021, 3.8, 0.40, 5, 13, 5, 15},
  {0.05, 13.0, 0.027, 5.9, 0.07, 7.4, 0.017, 4.0, 0.56, 2, 15, 1, 14},
  {0.07, 12.7, 0.026, 5.1, 0.11, 7.8, 0.026, 3.9, 0.42, 2, 15, 2, 16},
  {0.08, 12.1, 0.031, 5.2, 0.10, 8.3, 0.010, 3.9, 0.53, 3, 16, 3, 16},
}};

const std::vector<Topology::Edge> kIeee14Branches{
    {1, 2}, {1, 5}, {2, 3}, {2, 4}, {2, 5}, {3, 4}, {4, 5},
    {4, 7}, {4, 9}, {5, 6}, {6, 11}, {6, 12}, {6, 13}, {7, 8},
    {7, 9}, {9, 10}, {9, 14}, {10, 11}, {12, 13}, {13, 14}};
// clang-format on

void set_shared_bounds(HubParameters& hub, const EnergyVector& lo,
                       const EnergyVector& hi) {
  hub.r_lo = hub.s_lo = hub.d_lo = lo;
  hub.r_hi = hub.s_hi = hub.d_hi = hi;
}

}  // namespace

CaseStudy ieee14_case() {
  std::vector<HubParameters> hubs;
  hubs.reserve(kIeee14Nodes);
  for (const auto& row : kIeee14Table) {
    HubParameters hub;
    hub.efficiencies = EfficiencySet{0.9, 0.7, 0.5, 0.4};
    hub.cost_e = {row.a1e, row.a2e, 0.0};
    hub.cost_g = {row.a1g, row.a2g, 0.0};
    hub.util_e = {row.g1e, row.g2e, 0.0};
    hub.util_g = {row.g1g, row.g2g, 0.0};
    hub.constant = row.constant;
    set_shared_bounds(hub, kTableUnit * EnergyVector{row.lo_e, row.lo_g},
                      kTableUnit * EnergyVector{row.hi_e, row.hi_g});
    hubs.push_back(hub);
  }
  RunConfig defaults;
  defaults.rho = 0.1;
  defaults.epsilon = 0.05;
  defaults.n_min = 300;
  defaults.n_max = 1000;
  return CaseStudy{Topology(kIeee14Nodes, kIeee14Branches), std::move(hubs),
                   TradePrice{1.1, 0.6}, defaults};
}

CaseStudy random_case(int n, std::uint64_t seed,
                      const RandomCaseRanges& ranges) {
  if (n < 1) throw DomainError("random_case needs n >= 1");
  Rng rng(seed);

  std::vector<Topology::Edge> edges;
  for (int i = 2; i <= n; ++i) edges.emplace_back(1 + rng.below(i - 1), i);
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 2; j <= n; ++j) {
      if (rng.uniform() < ranges.extra_edge_probability) {
        bool present = false;
        for (const auto& [a, b] : edges) present |= (a == i && b == j);
        if (!present) edges.emplace_back(i, j);
      }
    }
  }

  std::vector<HubParameters> hubs;
  hubs.reserve(n);
  for (int i = 0; i < n; ++i) {
    HubParameters hub;
    do {
      hub.efficiencies = EfficiencySet{rng.uniform(0.85, 0.95),
                                       rng.uniform(0.6, 0.8),
                                       rng.uniform(0.45, 0.55),
                                       rng.uniform(0.35, 0.45)};
      hub.cost_e = {rng.uniform(ranges.cost_c2_lo, ranges.cost_c2_hi),
                    rng.uniform(ranges.cost_c1_lo, ranges.cost_c1_hi), 0.0};
      hub.cost_g = {rng.uniform(ranges.cost_c2_lo, ranges.cost_c2_hi) / 3.0,
                    rng.uniform(ranges.cost_c1_lo, ranges.cost_c1_hi) / 2.0, 0.0};
      hub.util_e = {rng.uniform(ranges.util_c2_lo, ranges.util_c2_hi),
                    rng.uniform(ranges.util_c1_lo, ranges.util_c1_hi), 0.0};
      hub.util_g = {rng.uniform(ranges.util_c2_lo, ranges.util_c2_hi) / 4.0,
                    rng.uniform(ranges.util_c1_lo, ranges.util_c1_hi) / 2.0, 0.0};
      hub.constant = rng.uniform(0.1, 0.8);
      const EnergyVector lo{rng.uniform(0.0, ranges.bound_lo_max),
                            rng.uniform(0.0, ranges.bound_lo_max)};
      const EnergyVector width{
          rng.uniform(ranges.bound_width_lo, ranges.bound_width_hi),
          rng.uniform(ranges.bound_width_lo, ranges.bound_width_hi)};
      set_shared_bounds(hub, lo, lo + width);
    } while (!omega_nonempty(hub));
    hubs.push_back(hub);
  }

  return CaseStudy{Topology(n, std::move(edges)), std::move(hubs),
                   TradePrice{1.1, 0.6}, RunConfig{}};
}

}  // namespace mesh_dispatch
