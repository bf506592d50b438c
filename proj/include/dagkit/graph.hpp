#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dagkit/pipeline.hpp"

namespace dagkit {

/// Dependency graph over node ids: explicit depends_on edges plus implicit
/// edges extracted from input_mapping references to node outputs.
struct DependencyGraph {
  std::vector<std::string> order;                            // document order
  std::set<std::pair<std::string, std::string>> edges;       // from -> to

  bool has_edge(const std::string& from, const std::string& to) const {
    return edges.count({from, to}) != 0;
  }
};

struct RouteEdge {
  std::string from;
  std::string to;
  std::string label;

  bool operator==(const RouteEdge&) const = default;
};

/// Route edges split by direction: forward edges take part in scheduling
/// as control dependencies; back edges (target is an ancestor of the
/// router) are the loop mechanism and are exempt from the cycle check.
struct RouteClassification {
  std::vector<RouteEdge> forward;
  std::vector<RouteEdge> back;
};

// Store-alias references add no edge; malformed references and references
// to unknown ids are skipped here and reported by the validator.
DependencyGraph infer_dependencies(const PipelineDoc& doc);

// Classifies each routes entry against the graph built so far (dependency
// edges plus forward route edges already classified), in document order,
// labels sorted within a node.
RouteClassification classify_route_edges(const PipelineDoc& doc,
                                         const DependencyGraph& deps);

/// True when `to` is reachable from `from` over the given edge set.
bool reachable(const std::set<std::pair<std::string, std::string>>& edges,
               const std::string& from, const std::string& to);

// Kahn-style topological sort into waves. Within a wave, ids are sorted
// lexicographically. Throws Error(cycle-detected) listing one cycle.
std::vector<std::vector<std::string>> kahn_schedule(
    const DependencyGraph& graph);

}  // namespace dagkit
