#include "mesh_dispatch/admm.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>

#include "mesh_dispatch/analysis.hpp"
#include "mesh_dispatch/rng.hpp"

namespace mesh_dispatch {

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers with a static
// partition. Exceptions are collected per index and the lowest index is
// rethrown, so failures do not depend on scheduling.
template <class Body>
void parallel_for(int n, int threads, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      try {
        body(i);
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
    pool.reserve(workers);
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

// M u: the supply-side injections (u1, u2 + u3).
EnergyVector supply_side(const NodeState& s) {
  return {s.u[0], s.u[1] + s.u[2]};
}

}  // namespace

void RunConfig::validate() const {
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (n_min < 1) throw DomainError("n_min must be at least 1");
  if (n_max < n_min) throw DomainError("n_max must be at least n_min");
  if (!(inner_tol > 0.0)) throw DomainError("inner_tol must be positive");
}

std::vector<NodeState> init(std::span<const HubParameters> hubs,
                            const RunConfig& cfg) {
  if (hubs.empty()) throw ModelError("no hubs to initialize");
  Rng rng(cfg.seed);
  std::vector<NodeState> states;
  states.reserve(hubs.size());
  for (const auto& hub : hubs) {
    NodeState st;
    st.r = {rng.uniform(hub.r_lo[0], hub.r_hi[0]),
            rng.uniform(hub.r_lo[1], hub.r_hi[1])};
    const EnergyVector s{rng.uniform(hub.s_lo[0], hub.s_hi[0]),
                         rng.uniform(hub.s_lo[1], hub.s_hi[1])};
    const double alpha = rng.uniform();
    st.u = compose_decision(hub.efficiencies, s, alpha);
    st.e = st.r - supply_side(st);
    const auto rec = recover(st.u, alpha);
    st.s = rec.s;
    st.d = rec.d;
    st.alpha = rec.alpha;
    states.push_back(st);
  }
  return states;
}

std::vector<NodeState> step(std::span<const NodeState> states,
                            const WeightMatrix& w,
                            std::span<const HubParameters> hubs,
                            const RunConfig& cfg) {
  const int n = static_cast<int>(states.size());
  if (w.size() != n || static_cast<int>(hubs.size()) != n) {
    throw std::invalid_argument("step: states, hubs and weights disagree in size");
  }
  std::vector<EnergyVector> e(n), mu(n);
  for (int i = 0; i < n; ++i) {
    e[i] = states[i].e;
    mu[i] = states[i].mu;
  }
  std::vector<NodeState> next(states.begin(), states.end());
  parallel_for(n, cfg.threads, [&](int i) {
    const NodeState& cur = states[i];
    NodeState& out = next[i];
    out.sigma = neighbor_sum<EnergyVector>(w, i, e);
    out.phi = neighbor_sum<EnergyVector>(w, i, mu);

    Subproblem sp;
    sp.hub = hubs[i];
    sp.rho = cfg.rho;
    sp.r_anchor = cur.r;
    sp.u_anchor = cur.u;
    sp.sigma = out.sigma;
    sp.phi = out.phi;
    LocalSolution sol;
    try {
      sol = solve_local(sp, cfg.inner_tol);
    } catch (const std::exception& ex) {
      throw NodeError(i + 1, ex.what());
    }
    out.r = sol.r;
    out.u = sol.u;
    out.e = out.sigma + (out.r - cur.r) - (supply_side(out) - supply_side(cur));
    out.mu = out.phi + cfg.rho * out.e;
    const auto rec = recover(out.u);
    out.s = rec.s;
    out.d = rec.d;
    out.alpha = rec.alpha;
  });
  return next;
}

double check_lemma1(std::span<const NodeState> states) {
  EnergyVector sum_e = EnergyVector::Zero();
  EnergyVector sum_gap = EnergyVector::Zero();
  for (const auto& st : states) {
    sum_e += st.e;
    sum_gap += st.r - supply_side(st);
  }
  return (sum_e - sum_gap).lpNorm<Eigen::Infinity>();
}

double check_lemma2(std::span<const NodeState> before,
                    std::span<const NodeState> after, const WeightMatrix& w,
                    double rho) {
  const int n = static_cast<int>(before.size());
  auto mean = [n](std::span<const NodeState> s, auto field) {
    EnergyVector acc = EnergyVector::Zero();
    for (const auto& st : s) acc += field(st);
    return EnergyVector(acc / n);
  };
  auto get_e = [](const NodeState& s) { return s.e; };
  auto get_mu = [](const NodeState& s) { return s.mu; };
  const EnergyVector e0 = mean(before, get_e), e1 = mean(after, get_e);
  const EnergyVector m0 = mean(before, get_mu), m1 = mean(after, get_mu);

  std::vector<EnergyVector> de0(n), dm0(n);
  for (int i = 0; i < n; ++i) {
    de0[i] = before[i].e - e0;
    dm0[i] = before[i].mu - m0;
  }
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const EnergyVector delta0 = (before[i].r - supply_side(before[i])) - e0;
    const EnergyVector delta1 = (after[i].r - supply_side(after[i])) - e1;
    const EnergyVector de1 = after[i].e - e1;
    const EnergyVector de_pred =
        neighbor_sum<EnergyVector>(w, i, de0) + (delta1 - delta0);
    const EnergyVector dm_pred = neighbor_sum<EnergyVector>(w, i, dm0) + rho * de1;
    worst = std::max(worst, (de1 - de_pred).lpNorm<Eigen::Infinity>());
    worst = std::max(worst,
                     ((after[i].mu - m1) - dm_pred).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double total_objective(std::span<const HubParameters> hubs,
                       std::span<const NodeState> states) {
  double f = 0.0;
  for (std::size_t i = 0; i < hubs.size(); ++i) {
    f += cost(hubs[i], states[i].r) - utility(hubs[i], states[i].d);
  }
  return f;
}

int threads_from_env(int fallback) {
  if (const char* env = std::getenv("MESH_DISPATCH_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) {
      return static_cast<int>(std::min<long>(v, 1024));
    }
  }
  return fallback;
}

RunResult run(std::span<const HubParameters> hubs, const Topology& t,
              const RunConfig& cfg, const RoundObserver& observer) {
  cfg.validate();
  if (hubs.empty()) throw ModelError("no hubs to run");
  if (static_cast<int>(hubs.size()) != t.size()) {
    throw ModelError("topology size does not match the hub count");
  }
  for (const auto& hub : hubs) hub.validate();
  const WeightMatrix w = metropolis_weights(t);

  RunResult result;
  result.states = init(hubs, cfg);
  result.trace.initial_mismatch = mismatch(result.states);
  if (observer) observer(0, result.states);

  int last_failure = 0;
  for (int k = 1; k <= cfg.n_max; ++k) {
    std::vector<NodeState> next = step(result.states, w, hubs, cfg);

    IterationRecord rec;
    rec.k = k;
    rec.deltas.resize(next.size());
    bool small = true;
    for (std::size_t i = 0; i < next.size(); ++i) {
      const auto& a = result.states[i];
      const auto& b = next[i];
      NodeDelta& d = rec.deltas[i];
      d.dr = (b.r - a.r).norm();
      d.ds = (b.s - a.s).norm();
      d.dd = (b.d - a.d).norm();
      d.dalpha = std::abs(b.alpha - a.alpha);
      small = small && d.dr < cfg.epsilon && d.ds < cfg.epsilon &&
              d.dd < cfg.epsilon && d.dalpha < cfg.epsilon;
    }
    rec.mismatch = mismatch(next);
    const auto spread = consensus_spread(next);
    rec.mu_spread = spread.mu;
    rec.e_spread = spread.e;
    for (const auto& st : next) rec.e_max = std::max(rec.e_max, st.e.norm());
    rec.lemma1_residual = check_lemma1(next);
    rec.lemma2_residual = check_lemma2(result.states, next, w, cfg.rho);
    rec.welfare = total_objective(hubs, next);

    result.states = std::move(next);
    result.trace.records.push_back(std::move(rec));
    if (observer) observer(k, result.states);

    if (!small) last_failure = k;
    if (small && k >= cfg.n_min) {
      result.trace.status = RunStatus::Converged;
      break;
    }
  }
  if (last_failure < static_cast<int>(result.trace.records.size())) {
    result.trace.iterations_to_epsilon = last_failure + 1;
  }
  return result;
}

}  // namespace mesh_dispatch
