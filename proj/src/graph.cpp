#include "dagkit/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include "dagkit/stores.hpp"

namespace dagkit {

DependencyGraph infer_dependencies(const PipelineDoc& doc) {
  DependencyGraph graph;
  std::set<std::string> ids;
  for (const auto& node : doc.nodes) {
    graph.order.push_back(node.id);
    ids.insert(node.id);
  }
  for (const auto& node : doc.nodes) {
    for (const auto& dep : node.depends_on) {
      if (ids.count(dep)) graph.edges.insert({dep, node.id});
    }
    for (const auto& [field, ref] : node.input_mapping) {
      (void)field;
      std::string source;
      try {
        source = resolve_reference(ref).first;
      } catch (const Error&) {
        continue;
      }
      if (store_alias(source)) continue;
      if (ids.count(source) && source != node.id) {
        graph.edges.insert({source, node.id});
      }
    }
  }
  return graph;
}

bool reachable(const std::set<std::pair<std::string, std::string>>& edges,
               const std::string& from, const std::string& to) {
  if (from == to) return true;
  std::deque<std::string> queue{from};
  std::set<std::string> seen{from};
  while (!queue.empty()) {
    std::string current = queue.front();
    queue.pop_front();
    for (const auto& [a, b] : edges) {
      if (a != current || seen.count(b)) continue;
      if (b == to) return true;
      seen.insert(b);
      queue.push_back(b);
    }
  }
  return false;
}

RouteClassification classify_route_edges(const PipelineDoc& doc,
                                         const DependencyGraph& deps) {
  RouteClassification out;
  std::set<std::string> ids(deps.order.begin(), deps.order.end());
  auto working = deps.edges;
  for (const auto& node : doc.nodes) {
    for (const auto& [label, target] : node.routes) {
      if (!ids.count(target)) continue;  // validator reports this
      if (reachable(working, target, node.id)) {
        out.back.push_back({node.id, target, label});
      } else {
        out.forward.push_back({node.id, target, label});
        working.insert({node.id, target});
      }
    }
  }
  return out;
}

std::vector<std::vector<std::string>> kahn_schedule(
    const DependencyGraph& graph) {
  std::map<std::string, int> in_degree;
  for (const auto& id : graph.order) in_degree[id] = 0;
  for (const auto& [from, to] : graph.edges) {
    if (in_degree.count(from) && in_degree.count(to)) ++in_degree[to];
  }

  std::vector<std::vector<std::string>> waves;
  std::set<std::string> done;
  while (done.size() < graph.order.size()) {
    std::vector<std::string> wave;
    for (const auto& [id, degree] : in_degree) {
      if (degree == 0 && !done.count(id)) wave.push_back(id);
    }
    if (wave.empty()) break;  // cycle among the rest
    std::sort(wave.begin(), wave.end());
    for (const auto& id : wave) {
      done.insert(id);
      for (const auto& [from, to] : graph.edges) {
        if (from == id && in_degree.count(to)) --in_degree[to];
      }
    }
    waves.push_back(std::move(wave));
  }

  if (done.size() < graph.order.size()) {
    // Walk the leftover nodes until one repeats to surface a concrete cycle.
    std::string start;
    for (const auto& id : graph.order) {
      if (!done.count(id)) {
        start = id;
        break;
      }
    }
    std::vector<std::string> path{start};
    std::set<std::string> on_path{start};
    std::string current = start;
    while (true) {
      std::string next;
      for (const auto& [from, to] : graph.edges) {
        if (from == current && !done.count(to)) {
          next = to;
          break;
        }
      }
      if (on_path.count(next)) {
        path.push_back(next);
        break;
      }
      path.push_back(next);
      on_path.insert(next);
      current = next;
    }
    std::ostringstream msg;
    msg << "dependency cycle: ";
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i) msg << " -> ";
      msg << path[i];
    }
    throw Error(errc::cycle_detected, msg.str());
  }
  return waves;
}

}  // namespace dagkit
