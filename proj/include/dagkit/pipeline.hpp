#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagkit/error.hpp"

namespace dagkit {

using Json = nlohmann::json;

/// One node of the pipeline document. Omitted fields keep these defaults.
struct NodeSpec {
  std::string id;
  std::string module;
  std::vector<std::string> depends_on;
  Json params = Json::object();
  std::map<std::string, std::string> input_mapping;   // local field -> "source.field"
  std::map<std::string, std::string> output_mapping;  // local field -> "target.field"
  std::map<std::string, std::string> routes;          // route label -> node id
  double timeout_seconds = 300.0;
  int retry = 0;

  bool operator==(const NodeSpec&) const = default;
};

/// Declarative edge, documentation only; the runner never consults it.
struct EdgeDecl {
  std::string from;
  std::string to;

  bool operator==(const EdgeDecl&) const = default;
};

struct RunConfig {
  int max_rounds = 100;
  int max_parallel = 0;  // 0 = unbounded

  bool operator==(const RunConfig&) const = default;
};

// source_map records the 1-based YAML line of every element the validator
// may point at, keyed by paths like "nodes[2]", "nodes[2].module",
// "config.max_rounds".
struct PipelineDoc {
  std::vector<NodeSpec> nodes;
  std::vector<EdgeDecl> edges;
  RunConfig config;
  std::map<std::string, int> source_map;

  const NodeSpec* find_node(const std::string& id) const;
  int line_of(const std::string& path) const;  // 0 when unknown
};

/// Structural equality, source_map excluded.
bool structurally_equal(const PipelineDoc& a, const PipelineDoc& b);

// Parses the YAML pipeline document. Throws Error with code yaml-syntax,
// not-a-mapping, or unknown-top-level-key; node-level defects are left for
// the validator, so a syntactically sound document always yields a doc.
PipelineDoc parse_pipeline(const std::string& text);

/// Splits a context reference on its first dot: "extract.seeds" ->
/// ("extract", "seeds"). Field names may contain further dots.
std::pair<std::string, std::string> resolve_reference(const std::string& ref);

/// Emits YAML such that parse_pipeline(serialize(doc)) is structurally
/// equal to doc. Default-valued optional fields are omitted.
std::string serialize(const PipelineDoc& doc);

}  // namespace dagkit
