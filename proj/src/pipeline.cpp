#include "dagkit/pipeline.hpp"

#include <charconv>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace dagkit {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line + 1; }

// Scalars come back from yaml-cpp untyped; recover JSON types with the
// plain-YAML core schema, treating quoted scalars as strings.
Json scalar_to_json(const YAML::Node& node) {
  const std::string& s = node.Scalar();
  if (node.Tag() == "!") return s;  // quoted
  if (s == "null" || s == "~" || s.empty()) return nullptr;
  if (s == "true") return true;
  if (s == "false") return false;
  long long integer = 0;
  auto [iptr, iec] = std::from_chars(s.data(), s.data() + s.size(), integer);
  if (iec == std::errc() && iptr == s.data() + s.size()) return integer;
  try {
    std::size_t consumed = 0;
    double real = std::stod(s, &consumed);
    if (consumed == s.size()) return real;
  } catch (const std::exception&) {
  }
  return s;
}

Json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      Json out = Json::array();
      for (const auto& item : node) out.push_back(yaml_to_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      Json out = Json::object();
      for (const auto& kv : node) {
        out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      }
      return out;
    }
    default:
      return nullptr;
  }
}

std::map<std::string, std::string> string_map_of(const YAML::Node& node) {
  std::map<std::string, std::string> out;
  if (!node.IsMap()) return out;
  for (const auto& kv : node) {
    if (kv.second.IsScalar()) {
      out[kv.first.as<std::string>()] = kv.second.as<std::string>();
    }
  }
  return out;
}

// Field-level parsing is deliberately lenient: malformed values keep the
// default and the schema pass reports them against the raw tree.
NodeSpec parse_node(const YAML::Node& raw, const std::string& path,
                    std::map<std::string, int>& source_map) {
  NodeSpec spec;
  if (!raw.IsMap()) return spec;
  for (const auto& kv : raw) {
    const std::string key = kv.first.as<std::string>();
    const YAML::Node& value = kv.second;
    source_map[path + "." + key] = line_of(kv.first);
    if (key == "id" && value.IsScalar()) {
      spec.id = value.as<std::string>();
    } else if (key == "module" && value.IsScalar()) {
      spec.module = value.as<std::string>();
    } else if (key == "depends_on" && value.IsSequence()) {
      for (const auto& dep : value) {
        if (dep.IsScalar()) spec.depends_on.push_back(dep.as<std::string>());
      }
    } else if (key == "params" && value.IsMap()) {
      spec.params = yaml_to_json(value);
    } else if (key == "input_mapping") {
      spec.input_mapping = string_map_of(value);
    } else if (key == "output_mapping") {
      spec.output_mapping = string_map_of(value);
    } else if (key == "routes") {
      spec.routes = string_map_of(value);
    } else if (key == "timeout" && value.IsScalar()) {
      try {
        spec.timeout_seconds = value.as<double>();
      } catch (const YAML::Exception&) {
      }
    } else if (key == "retry" && value.IsScalar()) {
      try {
        spec.retry = value.as<int>();
      } catch (const YAML::Exception&) {
      }
    }
  }
  return spec;
}

void emit_json(YAML::Emitter& out, const Json& value) {
  switch (value.type()) {
    case Json::value_t::null:
      out << YAML::Null;
      break;
    case Json::value_t::boolean:
      out << value.get<bool>();
      break;
    case Json::value_t::number_integer:
      out << value.get<long long>();
      break;
    case Json::value_t::number_unsigned:
      out << value.get<unsigned long long>();
      break;
    case Json::value_t::number_float:
      out << value.get<double>();
      break;
    case Json::value_t::string:
      out << value.get<std::string>();
      break;
    case Json::value_t::array:
      out << YAML::BeginSeq;
      for (const auto& item : value) emit_json(out, item);
      out << YAML::EndSeq;
      break;
    case Json::value_t::object:
      out << YAML::BeginMap;
      for (const auto& [key, item] : value.items()) {
        out << YAML::Key << key << YAML::Value;
        emit_json(out, item);
      }
      out << YAML::EndMap;
      break;
    default:
      out << YAML::Null;
      break;
  }
}

void emit_string_map(YAML::Emitter& out, const char* key,
                     const std::map<std::string, std::string>& map) {
  if (map.empty()) return;
  out << YAML::Key << key << YAML::Value << YAML::BeginMap;
  for (const auto& [k, v] : map) out << YAML::Key << k << YAML::Value << v;
  out << YAML::EndMap;
}

}  // namespace

const NodeSpec* PipelineDoc::find_node(const std::string& id) const {
  for (const auto& node : nodes) {
    if (node.id == id) return &node;
  }
  return nullptr;
}

int PipelineDoc::line_of(const std::string& path) const {
  auto it = source_map.find(path);
  return it == source_map.end() ? 0 : it->second;
}

bool structurally_equal(const PipelineDoc& a, const PipelineDoc& b) {
  return a.nodes == b.nodes && a.edges == b.edges && a.config == b.config;
}

PipelineDoc parse_pipeline(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(errc::yaml_syntax, "YAML syntax error at line " +
                                       std::to_string(e.mark.line + 1) + ": " +
                                       e.msg);
  }
  if (root.IsNull() || !root.IsDefined()) {
    return PipelineDoc{};  // empty document
  }
  if (!root.IsMap()) {
    throw Error(errc::not_a_mapping, "pipeline document must be a mapping");
  }

  PipelineDoc doc;
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (key != "nodes" && key != "edges" && key != "config") {
      throw Error(errc::unknown_top_level_key,
                  "unknown top-level key '" + key + "' at line " +
                      std::to_string(line_of(kv.first)));
    }
    doc.source_map[key] = line_of(kv.first);
  }

  const YAML::Node nodes = root["nodes"];
  if (nodes && nodes.IsSequence()) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      std::string path = "nodes[" + std::to_string(i) + "]";
      doc.source_map[path] = line_of(nodes[i]);
      doc.nodes.push_back(parse_node(nodes[i], path, doc.source_map));
    }
  }

  const YAML::Node edges = root["edges"];
  if (edges && edges.IsSequence()) {
    for (std::size_t i = 0; i < edges.size(); ++i) {
      std::string path = "edges[" + std::to_string(i) + "]";
      doc.source_map[path] = line_of(edges[i]);
      EdgeDecl edge;
      if (edges[i].IsMap()) {
        if (edges[i]["from"] && edges[i]["from"].IsScalar()) {
          edge.from = edges[i]["from"].as<std::string>();
        }
        if (edges[i]["to"] && edges[i]["to"].IsScalar()) {
          edge.to = edges[i]["to"].as<std::string>();
        }
      }
      doc.edges.push_back(std::move(edge));
    }
  }

  const YAML::Node config = root["config"];
  if (config && config.IsMap()) {
    for (const auto& kv : config) {
      const std::string key = kv.first.as<std::string>();
      doc.source_map["config." + key] = line_of(kv.first);
      try {
        if (key == "max_rounds" && kv.second.IsScalar()) {
          doc.config.max_rounds = kv.second.as<int>();
        } else if (key == "max_parallel" && kv.second.IsScalar()) {
          doc.config.max_parallel = kv.second.as<int>();
        }
      } catch (const YAML::Exception&) {
      }
    }
  }
  return doc;
}

std::pair<std::string, std::string> resolve_reference(const std::string& ref) {
  auto dot = ref.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == ref.size()) {
    throw Error(errc::malformed_reference,
                "context reference '" + ref +
                    "' must have the form <source>.<field>");
  }
  return {ref.substr(0, dot), ref.substr(dot + 1)};
}

std::string serialize(const PipelineDoc& doc) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "nodes" << YAML::Value << YAML::BeginSeq;
  for (const auto& node : doc.nodes) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << node.id;
    out << YAML::Key << "module" << YAML::Value << node.module;
    if (!node.depends_on.empty()) {
      out << YAML::Key << "depends_on" << YAML::Value << YAML::Flow
          << node.depends_on;
    }
    if (!node.params.empty()) {
      out << YAML::Key << "params" << YAML::Value;
      emit_json(out, node.params);
    }
    emit_string_map(out, "input_mapping", node.input_mapping);
    emit_string_map(out, "output_mapping", node.output_mapping);
    emit_string_map(out, "routes", node.routes);
    if (node.timeout_seconds != NodeSpec{}.timeout_seconds) {
      out << YAML::Key << "timeout" << YAML::Value << node.timeout_seconds;
    }
    if (node.retry != 0) {
      out << YAML::Key << "retry" << YAML::Value << node.retry;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  if (!doc.edges.empty()) {
    out << YAML::Key << "edges" << YAML::Value << YAML::BeginSeq;
    for (const auto& edge : doc.edges) {
      out << YAML::BeginMap;
      out << YAML::Key << "from" << YAML::Value << edge.from;
      out << YAML::Key << "to" << YAML::Value << edge.to;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::Key << "config" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "max_rounds" << YAML::Value << doc.config.max_rounds;
  out << YAML::Key << "max_parallel" << YAML::Value << doc.config.max_parallel;
  out << YAML::EndMap;
  out << YAML::EndMap;
  std::ostringstream text;
  text << out.c_str() << "\n";
  return text.str();
}

}  // namespace dagkit
