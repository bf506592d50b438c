#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <thread>

#include "dagkit/context.hpp"
#include "dagkit/stores.hpp"

#include "test_support.hpp"

using namespace dagkit;

TEST_CASE("context put/get round-trip") {
  ExecutionContext context("run-1");
  context.put("extract.seeds", Json::array({"a", "b"}));
  CHECK(context.get("extract.seeds") == Json::array({"a", "b"}));
  CHECK(context.contains("extract.seeds"));
  CHECK_FALSE(context.contains("extract.other"));
}

TEST_CASE("context keys are write-once") {
  ExecutionContext context("run-1");
  context.put("extract.seeds", 1);
  try {
    context.put("extract.seeds", 2);
    FAIL("expected duplicate-write");
  } catch (const Error& e) {
    CHECK(e.code() == errc::duplicate_write);
  }
  CHECK(context.get("extract.seeds") == 1);
}

TEST_CASE("context rejects malformed keys and missing reads") {
  ExecutionContext context("run-1");
  CHECK_THROWS_AS(context.put("nodot", 1), Error);
  try {
    context.get("extract.absent");
    FAIL("expected missing-key");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_key);
  }
}

TEST_CASE("clone namespaces are ordinary keys") {
  ExecutionContext context("run-1");
  context.put("gate#1.verdict", "ok");
  CHECK(context.get("gate#1.verdict") == "ok");
  context.put("gate#0.verdict", "also ok");
  context.put("gate#10.verdict", "ten");
  auto keys = context.clone_keys("gate", "verdict");
  REQUIRE(keys.size() == 3);
  CHECK(keys[0] == "gate#0.verdict");
  CHECK(keys[1] == "gate#1.verdict");
  CHECK(keys[2] == "gate#10.verdict");  // numeric, not lexicographic
}

TEST_CASE("erase_namespace drops only the owner's keys") {
  ExecutionContext context("run-1");
  context.put("a.x", 1);
  context.put("a.y", 2);
  context.put("ab.x", 3);
  context.erase_namespace("a");
  CHECK_FALSE(context.contains("a.x"));
  CHECK_FALSE(context.contains("a.y"));
  CHECK(context.contains("ab.x"));
  context.put("a.x", 9);  // writable again after reset
  CHECK(context.get("a.x") == 9);
}

TEST_CASE("store alias reads delegate to the store hub") {
  auto dir = dagkit::test::temp_dir("alias");
  StoreHub stores(dir);
  stores.persist_record(StoreId::papers, "papers", "Paper One",
                        Json{{"title", "Paper One"}}, "run-0");
  stores.persist_record(StoreId::papers, "papers", "Paper Two",
                        Json{{"title", "Paper Two"}}, "run-0");

  ExecutionContext context("run-1", &stores);
  Json papers = context.get_resolved("paper_store.papers");
  REQUIRE(papers.is_array());
  REQUIRE(papers.size() == 2);
  CHECK(papers[0]["title"] == "Paper Two");  // newest first
  std::filesystem::remove_all(dir);
}

TEST_CASE("normalize_key lowercases and trims only") {
  CHECK(normalize_key("  Seed A \t") == "seed a");
  CHECK(normalize_key("ALREADY") == "already");
  CHECK(normalize_key("küche") == "küche");  // no Unicode folding
  CHECK(normalize_key(" \n\t ") == "");
}

TEST_CASE("persist_record dedups on the normalized key") {
  auto dir = dagkit::test::temp_dir("dedup");
  StoreHub stores(dir);
  CHECK(stores.persist_record(StoreId::knowledge, "seed", "Seed A",
                              Json{{"v", 1}}, "run-1") ==
        PersistOutcome::inserted);
  CHECK(stores.persist_record(StoreId::knowledge, "seed", "  seed a ",
                              Json{{"v", 2}}, "run-2") ==
        PersistOutcome::deduplicated);
  CHECK(stores.row_count(StoreId::knowledge) == 1);

  // The first write wins.
  auto records = stores.query_records(StoreId::knowledge, "seed");
  REQUIRE(records.size() == 1);
  CHECK(records[0].payload == Json{{"v", 1}});
  CHECK(records[0].raw_key == "Seed A");
  CHECK(records[0].normalized_key == "seed a");
  std::filesystem::remove_all(dir);
}

TEST_CASE("dedup is scoped per record type") {
  auto dir = dagkit::test::temp_dir("pertype");
  StoreHub stores(dir);
  CHECK(stores.persist_record(StoreId::knowledge, "seed", "same key",
                              Json{}, "r") == PersistOutcome::inserted);
  CHECK(stores.persist_record(StoreId::knowledge, "hypothesis", "same key",
                              Json{}, "r") == PersistOutcome::inserted);
  CHECK(stores.row_count(StoreId::knowledge) == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("empty-after-trim keys are rejected") {
  auto dir = dagkit::test::temp_dir("emptykey");
  StoreHub stores(dir);
  try {
    stores.persist_record(StoreId::knowledge, "seed", "   \t ", Json{}, "r");
    FAIL("expected empty-key");
  } catch (const Error& e) {
    CHECK(e.code() == errc::empty_key);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("query_records filters by run id, newest first") {
  auto dir = dagkit::test::temp_dir("query");
  StoreHub stores(dir);
  stores.persist_record(StoreId::evaluations, "review", "k1", Json{{"n", 1}},
                        "run-1");
  stores.persist_record(StoreId::evaluations, "review", "k2", Json{{"n", 2}},
                        "run-2");
  stores.persist_record(StoreId::evaluations, "review", "k3", Json{{"n", 3}},
                        "run-2");

  auto all = stores.query_records(StoreId::evaluations, "review");
  REQUIRE(all.size() == 3);
  CHECK(all[0].payload["n"] == 3);
  CHECK(all[2].payload["n"] == 1);

  RecordFilter filter;
  filter.run_id = "run-2";
  auto scoped = stores.query_records(StoreId::evaluations, "review", filter);
  REQUIRE(scoped.size() == 2);
  for (const auto& record : scoped) CHECK(record.run_id == "run-2");
  std::filesystem::remove_all(dir);
}

TEST_CASE("records persist across hub instances (cross-run visibility)") {
  auto dir = dagkit::test::temp_dir("crossrun");
  {
    StoreHub stores(dir);
    stores.persist_record(StoreId::papers, "papers", "durable paper", Json{},
                          "run-1");
  }
  {
    StoreHub stores(dir);
    auto records = stores.query_records(StoreId::papers, "papers");
    REQUIRE(records.size() == 1);
    CHECK(records[0].run_id == "run-1");
    CHECK(stores.persist_record(StoreId::papers, "papers", "DURABLE PAPER",
                                Json{}, "run-2") ==
          PersistOutcome::deduplicated);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("dedup is stable under random case and whitespace perturbations") {
  auto dir = dagkit::test::temp_dir("perturb");
  StoreHub stores(dir);
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> pad(0, 3);

  const std::string raw = "Cross Domain Transfer 42";
  stores.persist_record(StoreId::knowledge, "seed", raw, Json{}, "r");
  for (int trial = 0; trial < 200; ++trial) {
    std::string perturbed = raw;
    for (char& c : perturbed) {
      if (std::isalpha(static_cast<unsigned char>(c)) && coin(rng)) {
        c = coin(rng) ? static_cast<char>(std::toupper(c))
                      : static_cast<char>(std::tolower(c));
      }
    }
    perturbed = std::string(pad(rng), ' ') + perturbed +
                std::string(pad(rng), '\t');
    CHECK(stores.persist_record(StoreId::knowledge, "seed", perturbed, Json{},
                                "r") == PersistOutcome::deduplicated);
  }
  CHECK(stores.row_count(StoreId::knowledge) == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent equal-key persists yield exactly one insert") {
  auto dir = dagkit::test::temp_dir("race");
  StoreHub stores(dir);
  std::atomic<int> inserted{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&stores, &inserted, i] {
      std::string key = (i % 2) ? "Racy Seed" : "  racy seed ";
      if (stores.persist_record(StoreId::knowledge, "seed", key, Json{},
                                "r") == PersistOutcome::inserted) {
        ++inserted;
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(inserted.load() == 1);
  CHECK(stores.row_count(StoreId::knowledge) == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dump exports the full store as JSON") {
  auto dir = dagkit::test::temp_dir("dump");
  StoreHub stores(dir);
  stores.persist_record(StoreId::writing, "draft", "Section 1",
                        Json{{"text", "..."}}, "run-9");
  Json doc = stores.dump(StoreId::writing);
  CHECK(doc["store"] == "writing");
  REQUIRE(doc["records"].size() == 1);
  CHECK(doc["records"][0]["raw_key"] == "Section 1");
  CHECK(doc["records"][0]["normalized_key"] == "section 1");
  CHECK(doc["records"][0]["run_id"] == "run-9");
  std::filesystem::remove_all(dir);
}

TEST_CASE("store aliases map to the five stores") {
  CHECK(store_alias("paper_store") == StoreId::papers);
  CHECK(store_alias("knowledge_store") == StoreId::knowledge);
  CHECK(store_alias("evaluation_store") == StoreId::evaluations);
  CHECK(store_alias("writing_store") == StoreId::writing);
  CHECK(store_alias("experiment_store") == StoreId::experiments);
  CHECK_FALSE(store_alias("extract").has_value());
  CHECK(parse_store_name("papers") == StoreId::papers);
  CHECK_FALSE(parse_store_name("junk").has_value());
}
