#include "dagkit/validator.hpp"

#include <algorithm>
#include <set>

#include <yaml-cpp/yaml.h>

#include "dagkit/stores.hpp"

namespace dagkit {

const char* to_string(ValidationPass pass) {
  switch (pass) {
    case ValidationPass::schema: return "schema";
    case ValidationPass::contract: return "contract";
    case ValidationPass::type: return "type";
    case ValidationPass::topology: return "topology";
  }
  return "schema";
}

const char* to_string(Severity severity) {
  return severity == Severity::error ? "error" : "warning";
}

bool ValidationReport::has_error_in(ValidationPass pass) const {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [&](const Diagnostic& d) {
                       return d.pass == pass && d.severity == Severity::error;
                     });
}

Json ValidationReport::to_json() const {
  Json items = Json::array();
  for (const auto& d : diagnostics) {
    items.push_back(Json{{"pass", to_string(d.pass)},
                         {"severity", to_string(d.severity)},
                         {"code", d.code},
                         {"message", d.message},
                         {"line", d.line}});
  }
  return Json{{"passed", passed}, {"diagnostics", std::move(items)}};
}

namespace {

int mark_line(const YAML::Node& node) { return node.Mark().line + 1; }

bool valid_identifier(const std::string& id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
      return false;
  }
  return true;
}

class SchemaChecker {
public:
  explicit SchemaChecker(std::vector<Diagnostic>& out) : out_(out) {}

  void error(std::string code, std::string message, int line) {
    out_.push_back({ValidationPass::schema, Severity::error, std::move(code),
                    std::move(message), line});
  }
  void warning(std::string code, std::string message, int line) {
    out_.push_back({ValidationPass::schema, Severity::warning, std::move(code),
                    std::move(message), line});
  }

  void check_root(const YAML::Node& root) {
    if (root.IsNull() || !root.IsDefined()) {
      warning("schema.empty-pipeline", "pipeline document is empty", 1);
      return;
    }
    if (!root.IsMap()) {
      error("schema.root-not-mapping", "pipeline document must be a mapping",
            mark_line(root));
      return;
    }
    for (const auto& kv : root) {
      std::string key = kv.first.as<std::string>();
      if (key != "nodes" && key != "edges" && key != "config") {
        error("schema.unknown-top-level-key",
              "unknown top-level key '" + key + "'", mark_line(kv.first));
      }
    }
    check_nodes(root["nodes"]);
    check_edges(root["edges"]);
    check_config(root["config"]);
  }

private:
  void check_nodes(const YAML::Node& nodes) {
    if (!nodes || nodes.IsNull()) {
      warning("schema.empty-pipeline", "pipeline declares no nodes", 1);
      return;
    }
    if (!nodes.IsSequence()) {
      error("schema.nodes-not-sequence", "'nodes' must be a sequence",
            mark_line(nodes));
      return;
    }
    if (nodes.size() == 0) {
      warning("schema.empty-pipeline", "pipeline declares no nodes",
              mark_line(nodes));
      return;
    }
    std::set<std::string> seen_ids;
    for (const auto& node : nodes) {
      check_node(node, seen_ids);
    }
  }

  void check_node(const YAML::Node& node, std::set<std::string>& seen_ids) {
    if (!node.IsMap()) {
      error("schema.node-not-mapping", "node entry must be a mapping",
            mark_line(node));
      return;
    }
    static const std::set<std::string> known_keys = {
        "id",            "module", "depends_on", "params", "input_mapping",
        "output_mapping", "routes", "timeout",    "retry"};
    for (const auto& kv : node) {
      std::string key = kv.first.as<std::string>();
      if (!known_keys.count(key)) {
        error("schema.node-unknown-key", "unknown node key '" + key + "'",
              mark_line(kv.first));
      }
    }

    const YAML::Node id = node["id"];
    if (!id || !id.IsScalar()) {
      error("schema.node-missing-id", "node entry lacks an 'id' string",
            mark_line(node));
    } else {
      std::string value = id.as<std::string>();
      if (!valid_identifier(value)) {
        error("schema.node-bad-id",
              "node id '" + value +
                  "' must be non-empty [A-Za-z0-9_-] (dots and '#' are "
                  "reserved)",
              mark_line(id));
      } else if (!seen_ids.insert(value).second) {
        error("schema.duplicate-node-id",
              "node id '" + value + "' is declared more than once",
              mark_line(id));
      }
    }

    const YAML::Node module = node["module"];
    if (!module || !module.IsScalar() || module.as<std::string>().empty()) {
      error("schema.node-missing-module",
            "node entry lacks a 'module' string", mark_line(node));
    }

    check_field_type(node, "depends_on", YAML::NodeType::Sequence);
    check_field_type(node, "params", YAML::NodeType::Map);
    check_string_map(node, "input_mapping");
    check_string_map(node, "output_mapping");
    check_string_map(node, "routes");

    if (const YAML::Node timeout = node["timeout"]) {
      double value = -1.0;
      bool numeric = timeout.IsScalar();
      if (numeric) {
        try {
          value = timeout.as<double>();
        } catch (const YAML::Exception&) {
          numeric = false;
        }
      }
      if (!numeric || value < 0.0) {
        error("schema.node-bad-timeout",
              "'timeout' must be a non-negative number of seconds",
              mark_line(timeout));
      }
    }
    if (const YAML::Node retry = node["retry"]) {
      long value = -1;
      bool integral = retry.IsScalar();
      if (integral) {
        try {
          value = retry.as<long>();
        } catch (const YAML::Exception&) {
          integral = false;
        }
      }
      if (!integral || value < 0) {
        error("schema.node-bad-retry",
              "'retry' must be a non-negative integer", mark_line(retry));
      }
    }
  }

  void check_field_type(const YAML::Node& node, const char* key,
                        YAML::NodeType::value expected) {
    const YAML::Node field = node[key];
    if (field && field.Type() != expected) {
      error("schema.node-bad-field",
            std::string("'") + key + "' has the wrong shape",
            mark_line(field));
    }
  }

  void check_string_map(const YAML::Node& node, const char* key) {
    const YAML::Node field = node[key];
    if (!field) return;
    if (!field.IsMap()) {
      error("schema.node-bad-field",
            std::string("'") + key + "' must be a mapping of strings",
            mark_line(field));
      return;
    }
    for (const auto& kv : field) {
      if (!kv.second.IsScalar()) {
        error("schema.node-bad-field",
              std::string("'") + key + "." + kv.first.as<std::string>() +
                  "' must be a string",
              mark_line(kv.second));
      }
    }
  }

  void check_edges(const YAML::Node& edges) {
    if (!edges) return;
    if (!edges.IsSequence()) {
      error("schema.edges-not-sequence", "'edges' must be a sequence",
            mark_line(edges));
      return;
    }
    for (const auto& edge : edges) {
      if (!edge.IsMap() || !edge["from"] || !edge["to"] ||
          !edge["from"].IsScalar() || !edge["to"].IsScalar()) {
        error("schema.edge-shape", "edge entries must be {from, to} mappings",
              mark_line(edge));
      }
    }
  }

  void check_config(const YAML::Node& config) {
    if (!config) return;
    if (!config.IsMap()) {
      error("schema.config-not-mapping", "'config' must be a mapping",
            mark_line(config));
      return;
    }
    for (const auto& kv : config) {
      std::string key = kv.first.as<std::string>();
      if (key == "max_rounds") {
        long value = 0;
        bool integral = kv.second.IsScalar();
        if (integral) {
          try {
            value = kv.second.as<long>();
          } catch (const YAML::Exception&) {
            integral = false;
          }
        }
        if (!integral || value < 1) {
          error("schema.config-max-rounds",
                "'max_rounds' must be an integer >= 1", mark_line(kv.second));
        }
      } else if (key == "max_parallel") {
        long value = -1;
        bool integral = kv.second.IsScalar();
        if (integral) {
          try {
            value = kv.second.as<long>();
          } catch (const YAML::Exception&) {
            integral = false;
          }
        }
        if (!integral || value < 0) {
          error("schema.config-max-parallel",
                "'max_parallel' must be an integer >= 0 (0 = unbounded)",
                mark_line(kv.second));
        }
      } else {
        warning("schema.config-unknown-key",
                "unknown config key '" + key + "'", mark_line(kv.first));
      }
    }
  }

  std::vector<Diagnostic>& out_;
};

}  // namespace

std::vector<Diagnostic> validate_schema(const std::string& yaml_text) {
  std::vector<Diagnostic> out;
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    out.push_back({ValidationPass::schema, Severity::error,
                   "schema.yaml-syntax", e.msg, e.mark.line + 1});
    return out;
  }
  SchemaChecker(out).check_root(root);
  return out;
}

ContractResult validate_contract(const PipelineDoc& doc) {
  ContractResult result;
  std::set<std::string> ids;
  for (const auto& node : doc.nodes) ids.insert(node.id);

  // Context keys each node declares it will produce.
  std::map<std::string, std::set<std::string>> declared_outputs;
  for (const auto& node : doc.nodes) {
    for (const auto& [field, ref] : node.output_mapping) {
      (void)field;
      declared_outputs[node.id].insert(ref);
    }
  }

  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    const NodeSpec& node = doc.nodes[i];
    const std::string path = "nodes[" + std::to_string(i) + "]";
    int node_line = doc.line_of(path);
    int mapping_line = doc.line_of(path + ".input_mapping");
    if (mapping_line == 0) mapping_line = node_line;

    for (const auto& dep : node.depends_on) {
      if (!ids.count(dep)) {
        result.diagnostics.push_back(
            {ValidationPass::contract, Severity::error,
             "contract.unknown-dependency",
             "node '" + node.id + "' depends on unknown node '" + dep + "'",
             doc.line_of(path + ".depends_on")});
      }
    }
    for (const auto& [label, target] : node.routes) {
      if (!ids.count(target)) {
        result.diagnostics.push_back(
            {ValidationPass::contract, Severity::error,
             "contract.unknown-route-target",
             "route '" + label + "' of node '" + node.id +
                 "' targets unknown node '" + target + "'",
             doc.line_of(path + ".routes")});
      }
    }

    for (const auto& [field, ref] : node.input_mapping) {
      std::string source, source_field;
      try {
        std::tie(source, source_field) = resolve_reference(ref);
      } catch (const Error& e) {
        result.diagnostics.push_back({ValidationPass::contract,
                                      Severity::error,
                                      "contract.malformed-reference",
                                      e.what(), mapping_line});
        continue;
      }
      if (store_alias(source)) continue;
      if (!ids.count(source)) {
        result.diagnostics.push_back(
            {ValidationPass::contract, Severity::error,
             "contract.unknown-source",
             "input '" + field + "' of node '" + node.id +
                 "' references '" + ref +
                 "' but no node or store alias named '" + source + "' exists",
             mapping_line});
        continue;
      }
      if (source == node.id) {
        result.diagnostics.push_back(
            {ValidationPass::contract, Severity::error,
             "contract.self-reference",
             "node '" + node.id + "' maps input '" + field +
                 "' from its own output",
             mapping_line});
        continue;
      }
      bool declared = declared_outputs.count(source) &&
                      declared_outputs.at(source).count(ref);
      bool via_depends = std::find(node.depends_on.begin(),
                                   node.depends_on.end(),
                                   source) != node.depends_on.end();
      if (!declared && !via_depends) {
        result.diagnostics.push_back(
            {ValidationPass::contract, Severity::error,
             "contract.unmatched-input",
             "input '" + field + "' of node '" + node.id + "' references '" +
                 ref + "' but node '" + source +
                 "' declares no such output_mapping key and is not listed "
                 "in depends_on",
             mapping_line});
        continue;
      }
      result.inferred_edges.insert({source, node.id});
    }
  }
  return result;
}

std::vector<Diagnostic> validate_types(const PipelineDoc& doc,
                                       const ModuleRegistry& registry) {
  std::vector<Diagnostic> out;

  // ref -> (module name, output field) for every declared output, so a wire
  // can be traced back to the producing module's output_spec tag.
  std::map<std::string, std::pair<std::string, std::string>> producers;
  for (const auto& node : doc.nodes) {
    for (const auto& [field, ref] : node.output_mapping) {
      producers[ref] = {node.module, field};
    }
  }

  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    const NodeSpec& node = doc.nodes[i];
    const std::string path = "nodes[" + std::to_string(i) + "]";
    int node_line = doc.line_of(path);
    int mapping_line = doc.line_of(path + ".input_mapping");
    if (mapping_line == 0) mapping_line = node_line;

    if (!registry.contains(node.module)) {
      out.push_back({ValidationPass::type, Severity::error,
                     "type.unknown-module",
                     "node '" + node.id + "' references unregistered module '" +
                         node.module + "'",
                     doc.line_of(path + ".module")});
      continue;
    }
    const ModuleDescriptor& descriptor = registry.lookup(node.module);

    for (const auto& [field, ref] : node.input_mapping) {
      auto consumer_tag = descriptor.input_spec.find(field);
      if (consumer_tag == descriptor.input_spec.end()) {
        // an empty input_spec is an open contract; only a non-empty spec
        // that omits the wired field is suspicious
        if (!descriptor.input_spec.empty()) {
          out.push_back({ValidationPass::type, Severity::warning,
                         "type.undeclared-input",
                         "node '" + node.id + "' wires field '" + field +
                             "' that module '" + node.module +
                             "' does not declare",
                         mapping_line});
        }
        continue;
      }
      std::string source;
      try {
        source = resolve_reference(ref).first;
      } catch (const Error&) {
        continue;  // contract pass reported it
      }
      if (store_alias(source)) continue;  // store payloads are opaque
      auto producer = producers.find(ref);
      if (producer == producers.end()) {
        continue;  // undeclared upstream output, reachable via depends_on
      }
      const auto& [producer_module, producer_field] = producer->second;
      if (!registry.contains(producer_module)) continue;
      const ModuleDescriptor& upstream = registry.lookup(producer_module);
      auto producer_tag = upstream.output_spec.find(producer_field);
      if (producer_tag == upstream.output_spec.end()) {
        out.push_back({ValidationPass::type, Severity::warning,
                       "type.undeclared-output",
                       "wire '" + ref + "' comes from field '" +
                           producer_field + "' that module '" +
                           producer_module + "' does not declare",
                       mapping_line});
        continue;
      }
      if (producer_tag->second != consumer_tag->second) {
        out.push_back({ValidationPass::type, Severity::error, "type.mismatch",
                       "wire '" + ref + "' carries tag '" +
                           producer_tag->second + "' but input '" + field +
                           "' of node '" + node.id + "' expects '" +
                           consumer_tag->second + "'",
                       mapping_line});
      }
    }

    for (const auto& [field, tag] : descriptor.input_spec) {
      if (node.input_mapping.count(field)) continue;
      if (node.params.contains(field)) continue;
      out.push_back({ValidationPass::type, Severity::error,
                     "type.unwired-input",
                     "input '" + field + "' (tag " + tag + ") of node '" +
                         node.id + "' is neither wired nor defaulted in "
                         "params",
                     node_line});
    }
  }
  return out;
}

std::vector<Diagnostic> validate_topology(
    const PipelineDoc& doc,
    const std::set<std::pair<std::string, std::string>>& inferred_edges) {
  std::vector<Diagnostic> out;
  std::set<std::string> ids;
  for (const auto& node : doc.nodes) ids.insert(node.id);

  DependencyGraph graph;
  for (const auto& node : doc.nodes) graph.order.push_back(node.id);
  for (const auto& node : doc.nodes) {
    for (const auto& dep : node.depends_on) {
      if (ids.count(dep)) graph.edges.insert({dep, node.id});
    }
  }
  for (const auto& edge : inferred_edges) graph.edges.insert(edge);

  RouteClassification routes = classify_route_edges(doc, graph);
  DependencyGraph with_routes = graph;
  for (const auto& edge : routes.forward) {
    with_routes.edges.insert({edge.from, edge.to});
  }

  try {
    kahn_schedule(with_routes);
  } catch (const Error& e) {
    out.push_back({ValidationPass::topology, Severity::error, "topology.cycle",
                   e.what(), 0});
  }

  // Declared edges are documentation; contradictions with the computed
  // graph are worth a warning, unknown endpoints an error.
  std::set<std::pair<std::string, std::string>> computed = with_routes.edges;
  for (const auto& edge : routes.back) computed.insert({edge.from, edge.to});
  for (std::size_t i = 0; i < doc.edges.size(); ++i) {
    const EdgeDecl& edge = doc.edges[i];
    int line = doc.line_of("edges[" + std::to_string(i) + "]");
    if (!ids.count(edge.from) || !ids.count(edge.to)) {
      out.push_back({ValidationPass::topology, Severity::error,
                     "topology.edge-unknown-node",
                     "declared edge " + edge.from + " -> " + edge.to +
                         " references an unknown node",
                     line});
      continue;
    }
    if (!computed.count({edge.from, edge.to})) {
      out.push_back({ValidationPass::topology, Severity::warning,
                     "topology.edge-mismatch",
                     "declared edge " + edge.from + " -> " + edge.to +
                         " does not appear in the computed graph",
                     line});
    }
  }

  if (doc.nodes.size() > 1) {
    for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
      const NodeSpec& node = doc.nodes[i];
      bool touched = false;
      for (const auto& [from, to] : computed) {
        if (from == node.id || to == node.id) {
          touched = true;
          break;
        }
      }
      if (!touched) {
        out.push_back({ValidationPass::topology, Severity::warning,
                       "topology.unreachable",
                       "node '" + node.id +
                           "' is connected to nothing and reachable from "
                           "nothing",
                       doc.line_of("nodes[" + std::to_string(i) + "]")});
      }
    }
  }

  // Orphan terminal: no successors and no output persisted to a store.
  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    const NodeSpec& node = doc.nodes[i];
    bool has_successor = false;
    for (const auto& [from, to] : computed) {
      if (from == node.id) {
        has_successor = true;
        break;
      }
    }
    if (has_successor) continue;
    bool persists = false;
    for (const auto& [field, ref] : node.output_mapping) {
      (void)field;
      try {
        if (store_alias(resolve_reference(ref).first)) {
          persists = true;
          break;
        }
      } catch (const Error&) {
      }
    }
    if (!persists && doc.nodes.size() > 1) {
      bool has_predecessor = false;
      for (const auto& [from, to] : computed) {
        if (to == node.id) {
          has_predecessor = true;
          break;
        }
      }
      if (has_predecessor) {
        out.push_back({ValidationPass::topology, Severity::warning,
                       "topology.orphan",
                       "terminal node '" + node.id +
                           "' has no successors and persists nothing to a "
                           "store",
                       doc.line_of("nodes[" + std::to_string(i) + "]")});
      }
    }
  }
  return out;
}

ValidationReport validate_all(const std::string& yaml_text,
                              const ModuleRegistry& registry) {
  ValidationReport report;
  report.diagnostics = validate_schema(yaml_text);
  bool schema_clean = !std::any_of(
      report.diagnostics.begin(), report.diagnostics.end(),
      [](const Diagnostic& d) { return d.severity == Severity::error; });

  if (schema_clean) {
    PipelineDoc doc = parse_pipeline(yaml_text);
    ContractResult contract = validate_contract(doc);
    bool contract_clean = !std::any_of(
        contract.diagnostics.begin(), contract.diagnostics.end(),
        [](const Diagnostic& d) { return d.severity == Severity::error; });
    report.diagnostics.insert(report.diagnostics.end(),
                              contract.diagnostics.begin(),
                              contract.diagnostics.end());
    if (contract_clean) {
      auto type_diagnostics = validate_types(doc, registry);
      report.diagnostics.insert(report.diagnostics.end(),
                                type_diagnostics.begin(),
                                type_diagnostics.end());
    }
    // Topology still runs on contract errors, over whatever edges resolved.
    auto topology_diagnostics = validate_topology(doc, contract.inferred_edges);
    report.diagnostics.insert(report.diagnostics.end(),
                              topology_diagnostics.begin(),
                              topology_diagnostics.end());
  }

  report.passed = !std::any_of(
      report.diagnostics.begin(), report.diagnostics.end(),
      [](const Diagnostic& d) { return d.severity == Severity::error; });
  return report;
}

}  // namespace dagkit
