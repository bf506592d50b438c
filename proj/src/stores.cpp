#include "dagkit/stores.hpp"

#include <cctype>
#include <chrono>
#include <ctime>

#include <sqlite3.h>

namespace dagkit {

const char* to_string(StoreId store) {
  switch (store) {
    case StoreId::papers: return "papers";
    case StoreId::knowledge: return "knowledge";
    case StoreId::evaluations: return "evaluations";
    case StoreId::writing: return "writing";
    case StoreId::experiments: return "experiments";
  }
  return "papers";
}

std::optional<StoreId> parse_store_name(const std::string& name) {
  for (StoreId store : all_stores) {
    if (name == to_string(store)) return store;
  }
  return std::nullopt;
}

std::optional<StoreId> store_alias(const std::string& source_id) {
  if (source_id == "paper_store") return StoreId::papers;
  if (source_id == "knowledge_store") return StoreId::knowledge;
  if (source_id == "evaluation_store") return StoreId::evaluations;
  if (source_id == "writing_store") return StoreId::writing;
  if (source_id == "experiment_store") return StoreId::experiments;
  return std::nullopt;
}

std::string normalize_key(const std::string& raw) {
  std::size_t begin = 0;
  std::size_t end = raw.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(raw[begin]))) {
    ++begin;
  }
  while (end > begin &&
         std::isspace(static_cast<unsigned char>(raw[end - 1]))) {
    --end;
  }
  std::string out = raw.substr(begin, end - begin);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

namespace {

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

constexpr const char* schema_sql =
    "CREATE TABLE IF NOT EXISTS records ("
    "  id INTEGER PRIMARY KEY AUTOINCREMENT,"
    "  record_type TEXT NOT NULL,"
    "  normalized_key TEXT NOT NULL,"
    "  raw_key TEXT NOT NULL,"
    "  payload TEXT NOT NULL,"
    "  run_id TEXT NOT NULL,"
    "  created_at TEXT NOT NULL,"
    "  UNIQUE(record_type, normalized_key));";

}  // namespace

struct StoreHub::Connection {
  sqlite3* db = nullptr;
  std::filesystem::path path;

  explicit Connection(std::filesystem::path p) : path(std::move(p)) { open(); }

  ~Connection() {
    if (db) sqlite3_close(db);
  }

  void open() {
    int rc = sqlite3_open_v2(
        path.c_str(), &db,
        SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
        nullptr);
    if (rc != SQLITE_OK) {
      throw Error(errc::store_io, "cannot open store database " +
                                      path.string() + ": " +
                                      sqlite3_errmsg(db));
    }
    sqlite3_busy_timeout(db, 5000);
    exec(schema_sql);
  }

  void exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string message = err ? err : "unknown sqlite error";
      sqlite3_free(err);
      throw Error(errc::store_io, message);
    }
  }
};

StoreHub::StoreHub(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
  for (StoreId store : all_stores) {
    connections_[static_cast<std::size_t>(store)] = std::make_unique<Connection>(
        directory_ / (std::string(to_string(store)) + ".db"));
  }
}

StoreHub::~StoreHub() = default;

StoreHub::Connection& StoreHub::connection(StoreId store) const {
  return *connections_[static_cast<std::size_t>(store)];
}

void StoreHub::reopen() {
  std::lock_guard<std::mutex> lock(mutex_);
  for (StoreId store : all_stores) {
    auto& slot = connections_[static_cast<std::size_t>(store)];
    slot = std::make_unique<Connection>(directory_ /
                                        (std::string(to_string(store)) + ".db"));
  }
}

PersistOutcome StoreHub::persist_record(StoreId store,
                                        const std::string& record_type,
                                        const std::string& raw_key,
                                        const Json& payload,
                                        const std::string& run_id) {
  std::string key = normalize_key(raw_key);
  if (key.empty()) {
    throw Error(errc::empty_key,
                "record key is empty after normalization: '" + raw_key + "'");
  }
  std::lock_guard<std::mutex> lock(mutex_);
  Connection& conn = connection(store);
  sqlite3_stmt* stmt = nullptr;
  const char* sql =
      "INSERT OR IGNORE INTO records "
      "(record_type, normalized_key, raw_key, payload, run_id, created_at) "
      "VALUES (?1, ?2, ?3, ?4, ?5, ?6);";
  if (sqlite3_prepare_v2(conn.db, sql, -1, &stmt, nullptr) != SQLITE_OK) {
    throw Error(errc::store_io, sqlite3_errmsg(conn.db));
  }
  std::string payload_text = payload.dump();
  std::string created = utc_now();
  sqlite3_bind_text(stmt, 1, record_type.c_str(), -1, SQLITE_TRANSIENT);
  sqlite3_bind_text(stmt, 2, key.c_str(), -1, SQLITE_TRANSIENT);
  sqlite3_bind_text(stmt, 3, raw_key.c_str(), -1, SQLITE_TRANSIENT);
  sqlite3_bind_text(stmt, 4, payload_text.c_str(), -1, SQLITE_TRANSIENT);
  sqlite3_bind_text(stmt, 5, run_id.c_str(), -1, SQLITE_TRANSIENT);
  sqlite3_bind_text(stmt, 6, created.c_str(), -1, SQLITE_TRANSIENT);
  int rc = sqlite3_step(stmt);
  sqlite3_finalize(stmt);
  if (rc != SQLITE_DONE) {
    throw Error(errc::store_io, sqlite3_errmsg(conn.db));
  }
  return sqlite3_changes(conn.db) > 0 ? PersistOutcome::inserted
                                      : PersistOutcome::deduplicated;
}

std::vector<StoreRecord> StoreHub::query_records(
    StoreId store, const std::string& record_type,
    const RecordFilter& filter) const {
  std::lock_guard<std::mutex> lock(mutex_);
  Connection& conn = connection(store);
  std::string sql =
      "SELECT id, record_type, normalized_key, raw_key, payload, run_id, "
      "created_at FROM records WHERE record_type = ?1";
  if (filter.run_id) sql += " AND run_id = ?2";
  sql += " ORDER BY id DESC";
  if (filter.limit) sql += " LIMIT " + std::to_string(*filter.limit);

  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(conn.db, sql.c_str(), -1, &stmt, nullptr) !=
      SQLITE_OK) {
    throw Error(errc::store_io, sqlite3_errmsg(conn.db));
  }
  sqlite3_bind_text(stmt, 1, record_type.c_str(), -1, SQLITE_TRANSIENT);
  if (filter.run_id) {
    sqlite3_bind_text(stmt, 2, filter.run_id->c_str(), -1, SQLITE_TRANSIENT);
  }

  std::vector<StoreRecord> out;
  while (sqlite3_step(stmt) == SQLITE_ROW) {
    StoreRecord record;
    record.store = store;
    record.seq = sqlite3_column_int64(stmt, 0);
    record.record_type =
        reinterpret_cast<const char*>(sqlite3_column_text(stmt, 1));
    record.normalized_key =
        reinterpret_cast<const char*>(sqlite3_column_text(stmt, 2));
    record.raw_key =
        reinterpret_cast<const char*>(sqlite3_column_text(stmt, 3));
    record.payload = Json::parse(
        reinterpret_cast<const char*>(sqlite3_column_text(stmt, 4)));
    record.run_id = reinterpret_cast<const char*>(sqlite3_column_text(stmt, 5));
    record.created_at =
        reinterpret_cast<const char*>(sqlite3_column_text(stmt, 6));
    out.push_back(std::move(record));
  }
  sqlite3_finalize(stmt);
  return out;
}

std::int64_t StoreHub::row_count(StoreId store,
                                 const std::string& record_type) const {
  std::lock_guard<std::mutex> lock(mutex_);
  Connection& conn = connection(store);
  std::string sql = "SELECT COUNT(*) FROM records";
  if (!record_type.empty()) sql += " WHERE record_type = ?1";
  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(conn.db, sql.c_str(), -1, &stmt, nullptr) !=
      SQLITE_OK) {
    throw Error(errc::store_io, sqlite3_errmsg(conn.db));
  }
  if (!record_type.empty()) {
    sqlite3_bind_text(stmt, 1, record_type.c_str(), -1, SQLITE_TRANSIENT);
  }
  std::int64_t count = 0;
  if (sqlite3_step(stmt) == SQLITE_ROW) count = sqlite3_column_int64(stmt, 0);
  sqlite3_finalize(stmt);
  return count;
}

Json StoreHub::dump(StoreId store) const {
  Json records = Json::array();
  std::lock_guard<std::mutex> lock(mutex_);
  Connection& conn = connection(store);
  sqlite3_stmt* stmt = nullptr;
  const char* sql =
      "SELECT record_type, normalized_key, raw_key, payload, run_id, "
      "created_at FROM records ORDER BY id ASC;";
  if (sqlite3_prepare_v2(conn.db, sql, -1, &stmt, nullptr) != SQLITE_OK) {
    throw Error(errc::store_io, sqlite3_errmsg(conn.db));
  }
  while (sqlite3_step(stmt) == SQLITE_ROW) {
    Json record;
    record["record_type"] =
        reinterpret_cast<const char*>(sqlite3_column_text(stmt, 0));
    record["normalized_key"] =
        reinterpret_cast<const char*>(sqlite3_column_text(stmt, 1));
    record["raw_key"] =
        reinterpret_cast<const char*>(sqlite3_column_text(stmt, 2));
    record["payload"] = Json::parse(
        reinterpret_cast<const char*>(sqlite3_column_text(stmt, 3)));
    record["run_id"] =
        reinterpret_cast<const char*>(sqlite3_column_text(stmt, 4));
    record["created_at"] =
        reinterpret_cast<const char*>(sqlite3_column_text(stmt, 5));
    records.push_back(std::move(record));
  }
  sqlite3_finalize(stmt);
  return Json{{"store", to_string(store)}, {"records", std::move(records)}};
}

}  // namespace dagkit
