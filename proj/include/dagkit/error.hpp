#pragma once

#include <stdexcept>
#include <string>

namespace dagkit {

// Every failure carries a stable machine-readable code next to the human
// message, so tests and callers never match on message text.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

private:
  std::string code_;
};

namespace errc {
// module-registry
inline constexpr const char* duplicate_name = "duplicate-name";
inline constexpr const char* invalid_descriptor = "invalid-descriptor";
inline constexpr const char* unknown_module = "unknown-module";
inline constexpr const char* missing_input = "missing-input";
inline constexpr const char* behavior_failure = "behavior-failure";
inline constexpr const char* registry_frozen = "registry-frozen";
// pipeline-dsl
inline constexpr const char* yaml_syntax = "yaml-syntax";
inline constexpr const char* not_a_mapping = "not-a-mapping";
inline constexpr const char* unknown_top_level_key = "unknown-top-level-key";
inline constexpr const char* malformed_reference = "malformed-reference";
// graph-runner
inline constexpr const char* cycle_detected = "cycle-detected";
inline constexpr const char* unknown_route_label = "unknown-route-label";
inline constexpr const char* ambiguous_routing = "ambiguous-routing";
inline constexpr const char* rounds_exhausted = "rounds-exhausted";
inline constexpr const char* clone_collision = "clone-collision";
inline constexpr const char* node_failure = "node-failure";
inline constexpr const char* node_timeout = "node-timeout";
inline constexpr const char* execution_stalled = "execution-stalled";
// context-store
inline constexpr const char* duplicate_write = "duplicate-write";
inline constexpr const char* missing_key = "missing-key";
inline constexpr const char* unknown_store = "unknown-store";
inline constexpr const char* empty_key = "empty-key";
inline constexpr const char* store_io = "store-io";
// kg-index
inline constexpr const char* port_failure = "port-failure";
inline constexpr const char* dimension_mismatch = "dimension-mismatch";
inline constexpr const char* dangling_reference = "dangling-reference";
inline constexpr const char* empty_index = "empty-index";
inline constexpr const char* unknown_node = "unknown-node";
// mock-provider
inline constexpr const char* no_rule_matched = "no-rule-matched";
inline constexpr const char* unknown_provider = "unknown-provider";
inline constexpr const char* provider_unavailable = "provider-unavailable";
}  // namespace errc

}  // namespace dagkit
