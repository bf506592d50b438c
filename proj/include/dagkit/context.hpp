#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagkit/error.hpp"
#include "dagkit/stores.hpp"

namespace dagkit {

// Flat per-run namespace: "effective_node_id.field" -> value. Keys are
// write-once; the runner clears a node's namespace before re-running it on
// a loop iteration. Reads through a store alias ("paper_store.papers")
// delegate to the attached StoreHub.
class ExecutionContext {
public:
  explicit ExecutionContext(std::string run_id, StoreHub* stores = nullptr)
      : run_id_(std::move(run_id)), stores_(stores) {}

  void put(const std::string& key, Json value);
  const Json& get(const std::string& key) const;
  Json get_resolved(const std::string& key) const;  // store aliases included
  bool contains(const std::string& key) const;

  /// Drops every key owned by the given effective node id.
  void erase_namespace(const std::string& effective_id);

  std::vector<std::string> keys() const;

  /// All keys whose source id is `base` or a clone of it ("base#k"),
  /// sorted by clone index.
  std::vector<std::string> clone_keys(const std::string& base,
                                      const std::string& field) const;

  Json to_json() const;

  const std::string& run_id() const { return run_id_; }
  StoreHub* stores() const { return stores_; }

private:
  std::string run_id_;
  StoreHub* stores_ = nullptr;
  std::map<std::string, Json> entries_;
};

}  // namespace dagkit
