#pragma once

#include <cstdint>
#include <vector>

#include "mesh_dispatch/admm.hpp"
#include "mesh_dispatch/energy_hub.hpp"
#include "mesh_dispatch/network.hpp"

namespace mesh_dispatch {

struct CaseStudy {
  Topology topology;
  std::vector<HubParameters> hubs;
  TradePrice zeta;
  RunConfig defaults;
};

/// Fourteen hubs on the standard IEEE 14-bus branch list with the welfare
/// parameters of the reference case. Bounds are given in units of 10 pu in
/// the source table and are stored here in pu.
CaseStudy ieee14_case();

struct RandomCaseRanges {
  double cost_c2_lo = 0.02, cost_c2_hi = 0.12;
  double cost_c1_lo = 5.0, cost_c1_hi = 13.5;
  double util_c2_lo = 0.01, util_c2_hi = 0.16;
  double util_c1_lo = 3.0, util_c1_hi = 8.5;
  double bound_lo_max = 50.0;    // lower bounds drawn from [0, bound_lo_max]
  double bound_width_lo = 60.0;  // upper = lower + width
  double bound_width_hi = 130.0;
  double extra_edge_probability = 0.2;
};

/// Connected random graph (random spanning tree plus extra edges) and hubs
/// with sign-correct coefficients and a nonempty local feasible set.
CaseStudy random_case(int n, std::uint64_t seed,
                      const RandomCaseRanges& ranges = {});

}  // namespace mesh_dispatch
