#include "dagkit/registry.hpp"

#include <algorithm>
#include <cmath>

namespace dagkit {

bool is_reserved_field(const std::string& name) {
  return std::find(reserved_fields.begin(), reserved_fields.end(), name) !=
         reserved_fields.end();
}

const char* to_string(ModuleKind kind) {
  return kind == ModuleKind::prompt ? "prompt" : "functional";
}

Json ModuleResult::to_wire() const {
  Json wire = outputs;
  if (route) wire["_route"] = *route;
  if (routes) wire["_routes"] = *routes;
  if (score) wire["_score"] = *score;
  if (!metadata.empty()) wire["_metadata"] = metadata;
  return wire;
}

ModuleResult ModuleResult::from_wire(const Json& wire) {
  ModuleResult result;
  for (const auto& [key, value] : wire.items()) {
    if (key == "_route") {
      result.route = value.get<std::string>();
    } else if (key == "_routes") {
      result.routes = std::vector<Json>(value.begin(), value.end());
    } else if (key == "_score") {
      result.score = value.get<double>();
    } else if (key == "_metadata") {
      result.metadata = value;
    } else {
      result.outputs[key] = value;
    }
  }
  return result;
}

namespace {

void check_descriptor(const ModuleDescriptor& d) {
  if (d.name.empty()) {
    throw Error(errc::invalid_descriptor, "module name must be non-empty");
  }
  for (const auto* spec : {&d.input_spec, &d.output_spec}) {
    for (const auto& [field, tag] : *spec) {
      if (is_reserved_field(field)) {
        throw Error(errc::invalid_descriptor,
                    "module '" + d.name + "' declares reserved field '" +
                        field + "' in its spec");
      }
      (void)tag;
    }
  }
}

}  // namespace

void ModuleRegistry::register_module(ModuleDescriptor descriptor,
                                     ModuleBehavior behavior) {
  if (frozen_) {
    throw Error(errc::registry_frozen,
                "registry is read-only after the first invoke");
  }
  check_descriptor(descriptor);
  if (entries_.count(descriptor.name)) {
    throw Error(errc::duplicate_name,
                "module '" + descriptor.name + "' is already registered");
  }
  std::string name = descriptor.name;
  entries_.emplace(std::move(name),
                   Entry{std::move(descriptor), std::move(behavior)});
}

const ModuleDescriptor& ModuleRegistry::lookup(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw Error(errc::unknown_module, "no module named '" + name + "'");
  }
  return it->second.descriptor;
}

bool ModuleRegistry::contains(const std::string& name) const {
  return entries_.count(name) != 0;
}

std::vector<std::string> ModuleRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;  // std::map keeps them sorted
}

ModuleResult ModuleRegistry::invoke(const std::string& name,
                                    const Json& inputs) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw Error(errc::unknown_module, "no module named '" + name + "'");
  }
  frozen_ = true;
  for (const auto& [field, tag] : it->second.descriptor.input_spec) {
    if (!inputs.contains(field)) {
      throw Error(errc::missing_input, "module '" + name +
                                           "' requires input '" + field +
                                           "' (tag " + tag + ")");
    }
  }
  try {
    return it->second.behavior(inputs);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(errc::behavior_failure,
                "module '" + name + "' failed: " + e.what());
  }
}

Json ModuleRegistry::emit_schemas() const {
  Json modules = Json::array();
  for (const auto& [name, entry] : entries_) {
    const auto& d = entry.descriptor;
    Json mod;
    mod["name"] = d.name;
    mod["kind"] = to_string(d.kind);
    mod["input_spec"] = d.input_spec;
    mod["output_spec"] = d.output_spec;
    mod["doc"] = d.doc;
    modules.push_back(std::move(mod));
  }
  return Json{{"modules", std::move(modules)}};
}

}  // namespace dagkit
