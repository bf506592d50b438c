#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagkit/graph.hpp"
#include "dagkit/pipeline.hpp"
#include "dagkit/registry.hpp"

namespace dagkit {

enum class ValidationPass { schema, contract, type, topology };
enum class Severity { error, warning };

const char* to_string(ValidationPass pass);
const char* to_string(Severity severity);

/// One finding. `code` is a stable identifier; tests assert on codes,
/// never on message text.
struct Diagnostic {
  ValidationPass pass = ValidationPass::schema;
  Severity severity = Severity::error;
  std::string code;
  std::string message;
  int line = 0;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;
  bool passed = true;  // true iff no error-severity diagnostic

  bool has_error_in(ValidationPass pass) const;
  Json to_json() const;
};

// Pass 1: structural check of the raw YAML tree (nodes / edges / config
// blocks). Operates on the text so it can report defects the typed parse
// papers over.
std::vector<Diagnostic> validate_schema(const std::string& yaml_text);

/// Pass 2 result: findings plus the implicit dependency edges inferred
/// from input_mapping.
struct ContractResult {
  std::vector<Diagnostic> diagnostics;
  std::set<std::pair<std::string, std::string>> inferred_edges;
};

// Pass 2: every input_mapping source must match an upstream output_mapping
// declaration or a store alias, unless the upstream node is listed in
// depends_on.
ContractResult validate_contract(const PipelineDoc& doc);

// Pass 3: cross-checks wires against the registry's input_spec/output_spec
// tags (exact string equality) and flags declared inputs that are neither
// wired nor defaulted through params.
std::vector<Diagnostic> validate_types(const PipelineDoc& doc,
                                       const ModuleRegistry& registry);

// Pass 4: Kahn-style check over explicit + implicit + route edges. Route
// back-edges are exempt from the cycle check and recorded as loop edges.
std::vector<Diagnostic> validate_topology(
    const PipelineDoc& doc,
    const std::set<std::pair<std::string, std::string>>& inferred_edges);

// Runs passes 1-4 in order. Schema errors skip everything downstream;
// contract errors skip the type pass but topology still runs over the
// explicit edges.
ValidationReport validate_all(const std::string& yaml_text,
                              const ModuleRegistry& registry);

}  // namespace dagkit
