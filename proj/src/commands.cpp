#include "mesh_dispatch/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "mesh_dispatch/config.hpp"

namespace mesh_dispatch {

namespace fs = std::filesystem;

namespace {

const std::vector<double> kDefaultSweep{0.01, 0.1, 1.0, 5.0};

std::ostream& log_of(const CommandOptions& opts) {
  return opts.log ? *opts.log : std::cerr;
}

struct Prepared {
  ConfigFile cfg;
  fs::path out;
};

Prepared prepare(const CommandOptions& opts) {
  Prepared p{load_config(opts.config), {}};
  if (opts.seed) p.cfg.run.seed = *opts.seed;
  p.cfg.run.threads = threads_from_env(1);
  p.out = opts.out ? *opts.out : fs::path(p.cfg.output.directory);
  fs::create_directories(p.out);
  return p;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

// Wraps a command body: config problems and any other failure map to exit 1.
template <class Body>
int guarded(const CommandOptions& opts, const char* name, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& ex) {
    log_of(opts) << name << ": invalid config " << opts.config.string() << ": "
                 << ex.what() << "\n";
  } catch (const std::exception& ex) {
    log_of(opts) << name << ": " << ex.what() << "\n";
  }
  return kExitError;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // drop the sign of negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& os, const RunTrace& trace, bool per_node) {
  os << "k,node,dr,ds,dd,dalpha,mismatch_e,mismatch_g,mu_spread,e_spread,"
        "lemma1_residual,F\n";
  for (const auto& rec : trace.records) {
    const std::string tail =
        format_number(rec.mismatch[0]) + "," + format_number(rec.mismatch[1]) + "," +
        format_number(rec.mu_spread) + "," + format_number(rec.e_spread) + "," +
        format_number(rec.lemma1_residual) + "," + format_number(rec.welfare) + "\n";
    auto row = [&](int node, const NodeDelta& d) {
      os << rec.k << ',' << node << ',' << format_number(d.dr) << ','
         << format_number(d.ds) << ',' << format_number(d.dd) << ','
         << format_number(d.dalpha) << ',' << tail;
    };
    if (per_node) {
      for (std::size_t i = 0; i < rec.deltas.size(); ++i) {
        row(static_cast<int>(i) + 1, rec.deltas[i]);
      }
    } else {
      NodeDelta worst;
      for (const auto& d : rec.deltas) {
        worst.dr = std::max(worst.dr, d.dr);
        worst.ds = std::max(worst.ds, d.ds);
        worst.dd = std::max(worst.dd, d.dd);
        worst.dalpha = std::max(worst.dalpha, d.dalpha);
      }
      row(0, worst);
    }
  }
}

void write_oracle_csv(std::ostream& os, std::span<const HubParameters> hubs,
                      const CentralSolution& sol) {
  os << "node,r_e,r_g,s_e,s_g,d_e,d_h,alpha,F_star,mu_e,mu_g\n";
  for (std::size_t i = 0; i < hubs.size(); ++i) {
    const auto rec = recover(sol.u_star[i]);
    const auto& r = sol.r_star[i];
    os << i + 1;
    for (double v : {r[0], r[1], rec.s[0], rec.s[1], rec.d[0], rec.d[1], rec.alpha,
                     sol.F_star, sol.mu_star[0], sol.mu_star[1]}) {
      os << ',' << format_number(v);
    }
    os << '\n';
  }
}

std::string certificate_json(const CertificateReport& rep) {
  nlohmann::ordered_json j;
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  j["gamma_W1"] = num(rep.gamma_W1);
  j["P_min_eig"] = num(rep.P_min_eig);
  j["contraction_min_eig"] = num(rep.contraction_min_eig);
  j["condition_42a_residual"] = num(rep.condition_42a_residual);
  j["verdict"] = rep.verdict;
  j["singular"] = rep.singular;
  return j.dump(2) + "\n";
}

int cmd_run(const CommandOptions& opts) {
  return guarded(opts, "run", [&] {
    auto p = prepare(opts);
    if (opts.rho.size() > 1) throw ConfigError("--rho takes a single value for run");
    if (!opts.rho.empty()) {
      p.cfg.run.rho = opts.rho.front();
      p.cfg.run.validate();
    }
    const auto result = run(p.cfg.study.hubs, p.cfg.study.topology, p.cfg.run);
    auto os = open_output(p.out / "trace.csv");
    write_trace_csv(os, result.trace, p.cfg.output.emit_per_node);
    const bool converged = result.trace.status == RunStatus::Converged;
    log_of(opts) << "run: " << (converged ? "converged" : "stopped at n_max") << " after "
                 << result.trace.records.size() << " rounds\n";
    return converged ? kExitOk : kExitNotConverged;
  });
}

int cmd_oracle(const CommandOptions& opts) {
  return guarded(opts, "oracle", [&] {
    auto p = prepare(opts);
    OracleOptions oo;
    oo.threads = p.cfg.run.threads;
    const auto sol = solve_centralized(p.cfg.study.hubs, oo);
    auto os = open_output(p.out / "oracle.csv");
    write_oracle_csv(os, p.cfg.study.hubs, sol);
    log_of(opts) << "oracle: F* = " << format_number(sol.F_star) << " after "
                 << sol.iterations << " dual iterations\n";
    return int(kExitOk);
  });
}

int cmd_sweep_rho(const CommandOptions& opts) {
  return guarded(opts, "sweep-rho", [&] {
    auto p = prepare(opts);
    const std::vector<double>& rhos = opts.rho.empty() ? kDefaultSweep : opts.rho;

    std::optional<double> f_star;
    try {
      OracleOptions oo;
      oo.threads = p.cfg.run.threads;
      f_star = solve_centralized(p.cfg.study.hubs, oo).F_star;
    } catch (const std::exception& ex) {
      log_of(opts) << "sweep-rho: oracle failed, welfare gaps omitted: " << ex.what() << "\n";
    }

    auto summary = open_output(p.out / "sweep_summary.csv");
    summary << "rho,converged,iterations_to_epsilon,welfare_gap,status\n";
    int code = kExitOk;
    for (double rho : rhos) {
      RunConfig cfg = p.cfg.run;
      cfg.rho = rho;
      summary << format_number(rho) << ',';
      try {
        const auto result = run(p.cfg.study.hubs, p.cfg.study.topology, cfg);
        auto os = open_output(p.out / ("trace_rho_" + format_number(rho) + ".csv"));
        write_trace_csv(os, result.trace, p.cfg.output.emit_per_node);
        const bool converged = result.trace.status == RunStatus::Converged;
        summary << (converged ? 1 : 0) << ',';
        if (result.trace.iterations_to_epsilon) summary << *result.trace.iterations_to_epsilon;
        summary << ',';
        if (f_star && !result.trace.records.empty() && *f_star != 0.0) {
          summary << format_number(welfare_gap(result.trace.records.back().welfare, *f_star));
        }
        summary << ',' << (converged ? "converged" : "max_iterations") << '\n';
        if (!converged && code == kExitOk) code = kExitNotConverged;
      } catch (const std::exception& ex) {
        summary << "0,,,error\n";
        log_of(opts) << "sweep-rho: rho = " << format_number(rho) << ": " << ex.what() << "\n";
        code = kExitError;
      }
    }
    return code;
  });
}

int cmd_certificate(const CommandOptions& opts) {
  return guarded(opts, "certificate", [&] {
    auto p = prepare(opts);
    const auto w = metropolis_weights(p.cfg.study.topology);
    const auto rep = lyapunov_certificate(w);
    auto os = open_output(p.out / "certificate.json");
    os << certificate_json(rep);
    if (rep.singular) {
      log_of(opts) << "certificate: I - W1 is singular (gamma = "
                   << format_number(rep.gamma_W1) << ")\n";
      return int(kExitNotConverged);
    }
    return rep.verdict ? int(kExitOk) : int(kExitNotConverged);
  });
}

}  // namespace mesh_dispatch
