#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagkit/error.hpp"

namespace dagkit {

using Json = nlohmann::json;

/// The five durable stores, each backed by its own database file.
enum class StoreId { papers, knowledge, evaluations, writing, experiments };

inline constexpr std::array<StoreId, 5> all_stores = {
    StoreId::papers, StoreId::knowledge, StoreId::evaluations,
    StoreId::writing, StoreId::experiments};

const char* to_string(StoreId store);
std::optional<StoreId> parse_store_name(const std::string& name);

/// Pipeline-side alias for a store ("paper_store" in an input_mapping
/// resolves against the papers store, not a node).
std::optional<StoreId> store_alias(const std::string& source_id);

enum class PersistOutcome { inserted, deduplicated };

/// Dedup key normalization: lowercase (ASCII only) + trim. No Unicode
/// folding.
std::string normalize_key(const std::string& raw);

struct StoreRecord {
  StoreId store;
  std::string record_type;
  std::string normalized_key;
  std::string raw_key;
  Json payload;
  std::string run_id;
  std::string created_at;
  std::int64_t seq = 0;
};

struct RecordFilter {
  std::optional<std::string> run_id;
  std::optional<int> limit;
};

// Cross-run persistence. (record_type, normalized_key) is unique per store;
// the first insert wins and every later equal key is a no-op.
class StoreHub {
public:
  explicit StoreHub(std::filesystem::path directory);
  ~StoreHub();
  StoreHub(const StoreHub&) = delete;
  StoreHub& operator=(const StoreHub&) = delete;

  PersistOutcome persist_record(StoreId store, const std::string& record_type,
                                const std::string& raw_key,
                                const Json& payload,
                                const std::string& run_id);

  /// Records across all runs matching the filter, newest first.
  std::vector<StoreRecord> query_records(StoreId store,
                                         const std::string& record_type,
                                         const RecordFilter& filter = {}) const;

  std::int64_t row_count(StoreId store,
                         const std::string& record_type = "") const;

  /// Full JSON dump of one store, for fixtures.
  Json dump(StoreId store) const;

  // Connections must not cross a fork; workers call this once after forking.
  void reopen();

  const std::filesystem::path& directory() const { return directory_; }

private:
  struct Connection;
  Connection& connection(StoreId store) const;

  std::filesystem::path directory_;
  mutable std::array<std::unique_ptr<Connection>, 5> connections_;
  mutable std::mutex mutex_;
};

}  // namespace dagkit
