#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mesh_dispatch/casegen.hpp"

namespace mesh_dispatch {

/// Invalid config document; the message names the offending field or the
/// line and column of a syntax error.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputConfig {
  std::string directory = ".";
  bool emit_per_node = true;
};

/// Parsed config document:
///   {
///     "case": "ieee14" | {"topology": <edges>, "zeta": [ze, zg], "hubs": [...]},
///     "run": {"rho", "epsilon", "n_min", "n_max", "seed", "inner_tol"},
///     "output": {"directory", "emit_per_node"}
///   }
/// Edges are either a text block ("1-2\n2-3" or "1 2, 2 3") or an array of
/// [i, j] pairs. Unknown keys are rejected everywhere.
struct ConfigFile {
  CaseStudy study;
  RunConfig run;
  OutputConfig output;
};

ConfigFile parse_config(const std::string& text);
ConfigFile load_config(const std::filesystem::path& path);

/// Hub and case conversion in the config schema.
nlohmann::ordered_json hub_to_json(const HubParameters& hub);
HubParameters hub_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::ordered_json case_to_json(const CaseStudy& study);
CaseStudy case_from_json(const nlohmann::json& j, const std::string& where = "case");

/// Full config document for a case with its default run settings.
std::string export_config(const CaseStudy& study, const OutputConfig& output = {});

/// Parses an edge-list text block: pairs separated by newlines or commas,
/// endpoints by '-' or whitespace. '#' starts a comment.
std::vector<Topology::Edge> parse_edge_text(const std::string& text);

}  // namespace mesh_dispatch
