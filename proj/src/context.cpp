#include "dagkit/context.hpp"

#include <algorithm>

#include "dagkit/pipeline.hpp"

namespace dagkit {

void ExecutionContext::put(const std::string& key, Json value) {
  resolve_reference(key);  // well-formedness: <id>.<field>
  auto [it, inserted] = entries_.emplace(key, std::move(value));
  if (!inserted) {
    throw Error(errc::duplicate_write,
                "context key '" + key + "' was already written");
  }
}

const Json& ExecutionContext::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw Error(errc::missing_key, "context key '" + key + "' is absent");
  }
  return it->second;
}

Json ExecutionContext::get_resolved(const std::string& key) const {
  auto [source, field] = resolve_reference(key);
  if (auto store = store_alias(source)) {
    if (!stores_) {
      throw Error(errc::unknown_store,
                  "no store hub attached for alias '" + source + "'");
    }
    Json payloads = Json::array();
    for (const auto& record : stores_->query_records(*store, field)) {
      payloads.push_back(record.payload);
    }
    return payloads;
  }
  return get(key);
}

bool ExecutionContext::contains(const std::string& key) const {
  return entries_.count(key) != 0;
}

void ExecutionContext::erase_namespace(const std::string& effective_id) {
  const std::string prefix = effective_id + ".";
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->first.rfind(prefix, 0) == 0) {
      it = entries_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<std::string> ExecutionContext::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [key, value] : entries_) out.push_back(key);
  return out;
}

std::vector<std::string> ExecutionContext::clone_keys(
    const std::string& base, const std::string& field) const {
  // Clone suffixes are numeric, so sort by index rather than by string.
  std::vector<std::pair<long, std::string>> found;
  const std::string prefix = base + "#";
  for (const auto& [key, value] : entries_) {
    if (key.rfind(prefix, 0) != 0) continue;
    auto dot = key.find('.');
    if (dot == std::string::npos || key.substr(dot + 1) != field) continue;
    std::string suffix = key.substr(prefix.size(), dot - prefix.size());
    char* end = nullptr;
    long index = std::strtol(suffix.c_str(), &end, 10);
    if (end && *end == '\0') found.emplace_back(index, key);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  out.reserve(found.size());
  for (auto& [index, key] : found) out.push_back(std::move(key));
  return out;
}

Json ExecutionContext::to_json() const {
  Json out = Json::object();
  for (const auto& [key, value] : entries_) out[key] = value;
  return out;
}

}  // namespace dagkit
