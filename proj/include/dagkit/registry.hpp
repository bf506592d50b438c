#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagkit/error.hpp"

namespace dagkit {

using Json = nlohmann::json;

// The four result fields the runner owns. Modules steer scheduling through
// them and through nothing else; they never appear in domain outputs.
inline constexpr std::array<const char*, 4> reserved_fields = {
    "_route", "_routes", "_score", "_metadata"};

bool is_reserved_field(const std::string& name);

enum class ModuleKind { prompt, functional };

const char* to_string(ModuleKind kind);

/// Self-describing module schema: field name -> semantic type tag.
struct ModuleDescriptor {
  std::string name;
  ModuleKind kind = ModuleKind::functional;
  std::map<std::string, std::string> input_spec;
  std::map<std::string, std::string> output_spec;
  std::string doc;
};

/// What a module hands back: domain outputs plus the routing fields.
struct ModuleResult {
  Json outputs = Json::object();
  std::optional<std::string> route;
  std::optional<std::vector<Json>> routes;
  std::optional<double> score;
  Json metadata = Json::object();

  // Round-trips through the wire shape of the contract: one object holding
  // the domain outputs with the reserved keys folded in.
  Json to_wire() const;
  static ModuleResult from_wire(const Json& wire);
};

using ModuleBehavior = std::function<ModuleResult(const Json& inputs)>;

// Populated once at startup, read-only afterwards; the first invoke freezes
// registration.
class ModuleRegistry {
public:
  void register_module(ModuleDescriptor descriptor, ModuleBehavior behavior);

  const ModuleDescriptor& lookup(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

  ModuleResult invoke(const std::string& name, const Json& inputs) const;

  /// One JSON document describing every module, sorted by name.
  Json emit_schemas() const;

private:
  struct Entry {
    ModuleDescriptor descriptor;
    ModuleBehavior behavior;
  };
  std::map<std::string, Entry> entries_;
  mutable bool frozen_ = false;
};

}  // namespace dagkit
