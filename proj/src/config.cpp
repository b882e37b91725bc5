#include "mesh_dispatch/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace mesh_dispatch {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

// Rejects keys outside `allowed` and reports missing `required` ones.
void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed,
                std::initializer_list<const char*> required = {}) {
  expect_object(j, where);
  for (const auto& [key, _] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
  for (const char* key : required) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

std::int64_t integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<std::int64_t>();
}

EnergyVector pair_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError(where + ": expected a two-element array");
  }
  return {number(j[0], where + "[0]"), number(j[1], where + "[1]")};
}

QuadraticCoeffs quadratic(const json& j, const std::string& where) {
  check_keys(j, where, {"c2", "c1", "c0"}, {"c2", "c1"});
  QuadraticCoeffs q;
  q.c2 = number(j["c2"], where + ".c2");
  q.c1 = number(j["c1"], where + ".c1");
  if (j.contains("c0")) q.c0 = number(j["c0"], where + ".c0");
  return q;
}

ordered_json quadratic_to_json(const QuadraticCoeffs& q) {
  ordered_json j;
  j["c2"] = q.c2;
  j["c1"] = q.c1;
  j["c0"] = q.c0;
  return j;
}

ordered_json pair_to_json(const EnergyVector& v) { return ordered_json::array({v[0], v[1]}); }

std::vector<Topology::Edge> edges_from_json(const json& j, const std::string& where) {
  if (j.is_string()) {
    try {
      return parse_edge_text(j.get<std::string>());
    } catch (const ConfigError& ex) {
      throw ConfigError(where + ": " + ex.what());
    }
  }
  if (!j.is_array()) throw ConfigError(where + ": expected an edge list");
  std::vector<Topology::Edge> edges;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string at = where + "[" + std::to_string(k) + "]";
    if (!j[k].is_array() || j[k].size() != 2) {
      throw ConfigError(at + ": expected a pair of node ids");
    }
    edges.emplace_back(static_cast<int>(integer(j[k][0], at)),
                       static_cast<int>(integer(j[k][1], at)));
  }
  return edges;
}

RunConfig run_from_json(const json& j, RunConfig cfg) {
  check_keys(j, "run", {"rho", "epsilon", "n_min", "n_max", "seed", "inner_tol"});
  if (j.contains("rho")) cfg.rho = number(j["rho"], "run.rho");
  if (j.contains("epsilon")) cfg.epsilon = number(j["epsilon"], "run.epsilon");
  if (j.contains("n_min")) cfg.n_min = static_cast<int>(integer(j["n_min"], "run.n_min"));
  if (j.contains("n_max")) cfg.n_max = static_cast<int>(integer(j["n_max"], "run.n_max"));
  if (j.contains("seed")) {
    const std::int64_t seed = integer(j["seed"], "run.seed");
    if (seed < 0) throw ConfigError("run.seed: must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  if (j.contains("inner_tol")) cfg.inner_tol = number(j["inner_tol"], "run.inner_tol");
  try {
    cfg.validate();
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("run: ") + ex.what());
  }
  return cfg;
}

OutputConfig output_from_json(const json& j) {
  check_keys(j, "output", {"directory", "emit_per_node"});
  OutputConfig out;
  if (j.contains("directory")) {
    if (!j["directory"].is_string()) throw ConfigError("output.directory: expected a string");
    out.directory = j["directory"].get<std::string>();
  }
  if (j.contains("emit_per_node")) {
    if (!j["emit_per_node"].is_boolean()) {
      throw ConfigError("output.emit_per_node: expected a boolean");
    }
    out.emit_per_node = j["emit_per_node"].get<bool>();
  }
  return out;
}

}  // namespace

std::vector<Topology::Edge> parse_edge_text(const std::string& text) {
  std::vector<Topology::Edge> edges;
  std::string normalized;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      normalized += '\n';
      continue;
    }
    normalized += (c == ',') ? '\n' : (c == '-' ? ' ' : c);
  }
  std::istringstream lines(normalized);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); })) {
      continue;
    }
    std::istringstream ls(line);
    int a = 0, b = 0;
    std::string rest;
    if (!(ls >> a >> b) || (ls >> rest)) {
      throw ConfigError("edge entry " + std::to_string(lineno) + " is not 'i-j': '" + line + "'");
    }
    edges.emplace_back(a, b);
  }
  return edges;
}

ordered_json hub_to_json(const HubParameters& hub) {
  ordered_json j;
  j["efficiencies"] = {{"eta_ee", hub.efficiencies.eta_ee},
                       {"eta_ce", hub.efficiencies.eta_ce},
                       {"eta_ch", hub.efficiencies.eta_ch},
                       {"eta_gh", hub.efficiencies.eta_gh}};
  j["cost_e"] = quadratic_to_json(hub.cost_e);
  j["cost_g"] = quadratic_to_json(hub.cost_g);
  j["util_e"] = quadratic_to_json(hub.util_e);
  j["util_g"] = quadratic_to_json(hub.util_g);
  j["constant"] = hub.constant;
  j["r_lo"] = pair_to_json(hub.r_lo);
  j["r_hi"] = pair_to_json(hub.r_hi);
  j["s_lo"] = pair_to_json(hub.s_lo);
  j["s_hi"] = pair_to_json(hub.s_hi);
  j["d_lo"] = pair_to_json(hub.d_lo);
  j["d_hi"] = pair_to_json(hub.d_hi);
  if (hub.taguchi_theta) j["taguchi_theta"] = *hub.taguchi_theta;
  if (hub.d_hat) j["d_hat"] = pair_to_json(*hub.d_hat);
  return j;
}

HubParameters hub_from_json(const json& j, const std::string& where) {
  check_keys(j, where,
             {"efficiencies", "cost_e", "cost_g", "util_e", "util_g", "constant",
              "r_lo", "r_hi", "s_lo", "s_hi", "d_lo", "d_hi", "taguchi_theta", "d_hat"},
             {"cost_e", "cost_g", "util_e", "util_g", "r_lo", "r_hi", "s_lo", "s_hi",
              "d_lo", "d_hi"});
  HubParameters hub;
  if (j.contains("efficiencies")) {
    const auto& e = j["efficiencies"];
    const std::string at = where + ".efficiencies";
    check_keys(e, at, {"eta_ee", "eta_ce", "eta_ch", "eta_gh"},
               {"eta_ee", "eta_ce", "eta_ch", "eta_gh"});
    hub.efficiencies = {number(e["eta_ee"], at + ".eta_ee"), number(e["eta_ce"], at + ".eta_ce"),
                        number(e["eta_ch"], at + ".eta_ch"), number(e["eta_gh"], at + ".eta_gh")};
  }
  hub.cost_e = quadratic(j["cost_e"], where + ".cost_e");
  hub.cost_g = quadratic(j["cost_g"], where + ".cost_g");
  hub.util_e = quadratic(j["util_e"], where + ".util_e");
  hub.util_g = quadratic(j["util_g"], where + ".util_g");
  if (j.contains("constant")) hub.constant = number(j["constant"], where + ".constant");
  hub.r_lo = pair_of(j["r_lo"], where + ".r_lo");
  hub.r_hi = pair_of(j["r_hi"], where + ".r_hi");
  hub.s_lo = pair_of(j["s_lo"], where + ".s_lo");
  hub.s_hi = pair_of(j["s_hi"], where + ".s_hi");
  hub.d_lo = pair_of(j["d_lo"], where + ".d_lo");
  hub.d_hi = pair_of(j["d_hi"], where + ".d_hi");
  if (j.contains("taguchi_theta") != j.contains("d_hat")) {
    throw ConfigError(where + ": taguchi_theta and d_hat must be given together");
  }
  if (j.contains("taguchi_theta")) {
    hub.taguchi_theta = number(j["taguchi_theta"], where + ".taguchi_theta");
    hub.d_hat = pair_of(j["d_hat"], where + ".d_hat");
  }
  try {
    hub.validate();
  } catch (const std::exception& ex) {
    throw ConfigError(where + ": " + ex.what());
  }
  return hub;
}

ordered_json case_to_json(const CaseStudy& study) {
  ordered_json j;
  ordered_json edges = ordered_json::array();
  for (const auto& [a, b] : study.topology.edges()) edges.push_back({a, b});
  j["topology"] = edges;
  j["zeta"] = {study.zeta.zeta_e, study.zeta.zeta_g};
  ordered_json hubs = ordered_json::array();
  for (const auto& hub : study.hubs) hubs.push_back(hub_to_json(hub));
  j["hubs"] = hubs;
  return j;
}

CaseStudy case_from_json(const json& j, const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() == "ieee14") return ieee14_case();
    throw ConfigError(where + ": unknown built-in case '" + j.get<std::string>() + "'");
  }
  check_keys(j, where, {"topology", "zeta", "hubs"}, {"topology", "hubs"});
  if (!j["hubs"].is_array()) throw ConfigError(where + ".hubs: expected an array");
  if (j["hubs"].empty()) throw ConfigError(where + ".hubs: at least one hub is required");

  std::vector<HubParameters> hubs;
  for (std::size_t k = 0; k < j["hubs"].size(); ++k) {
    hubs.push_back(hub_from_json(j["hubs"][k], where + ".hubs[" + std::to_string(k) + "]"));
  }
  const auto edges = edges_from_json(j["topology"], where + ".topology");
  const int n = static_cast<int>(hubs.size());
  std::optional<Topology> topology;
  try {
    topology.emplace(n, edges);
  } catch (const std::exception& ex) {
    throw ConfigError(where + ".topology: " + ex.what());
  }
  if (!topology->connected()) {
    throw ConfigError(where + ".topology: communication graph is not connected");
  }
  TradePrice zeta;
  if (j.contains("zeta")) {
    const EnergyVector z = pair_of(j["zeta"], where + ".zeta");
    zeta = {z[0], z[1]};
  }
  return CaseStudy{*topology, std::move(hubs), zeta, RunConfig{}};
}

ConfigFile parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ConfigError(std::string("syntax error: ") + ex.what());
  }
  check_keys(doc, "config", {"case", "run", "output"}, {"case"});
  ConfigFile cfg{case_from_json(doc["case"]), RunConfig{}, OutputConfig{}};
  cfg.run = cfg.study.defaults;
  if (doc.contains("run")) cfg.run = run_from_json(doc["run"], cfg.run);
  if (doc.contains("output")) cfg.output = output_from_json(doc["output"]);
  return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string export_config(const CaseStudy& study, const OutputConfig& output) {
  ordered_json doc;
  doc["case"] = case_to_json(study);
  const RunConfig& r = study.defaults;
  doc["run"] = {{"rho", r.rho},     {"epsilon", r.epsilon}, {"n_min", r.n_min},
                {"n_max", r.n_max}, {"seed", r.seed},       {"inner_tol", r.inner_tol}};
  doc["output"] = {{"directory", output.directory}, {"emit_per_node", output.emit_per_node}};
  return doc.dump(2) + "\n";
}

}  // namespace mesh_dispatch
