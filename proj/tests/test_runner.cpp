#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <fstream>
#include <random>
#include <thread>

#include "dagkit/runner.hpp"

#include "test_support.hpp"

using namespace dagkit;

namespace {

ModuleResult outputs_only(Json outputs) {
  ModuleResult result;
  result.outputs = std::move(outputs);
  return result;
}

RunOptions fast_options() {
  RunOptions options;
  options.retry_delay_seconds = 0.01;
  return options;
}

int count_runs(const RunState& state, const std::string& node) {
  auto it = state.node_exec_counts.find(node);
  return it == state.node_exec_counts.end() ? 0 : it->second;
}

// The score-gated loop shape: gate routes "continue" back to generate.
const char* loop_pipeline = R"(nodes:
  - id: extract
    module: extract_mod
    output_mapping:
      seeds: extract.seeds
  - id: generate
    module: generate_mod
    depends_on: [extract]
    input_mapping:
      seeds: extract.seeds
  - id: gate
    module: gate_mod
    depends_on: [generate]
    input_mapping:
      ideas: generate.ideas
    routes:
      "continue": generate
      "stop": export
  - id: export
    module: export_mod
    depends_on: [gate]
config:
  max_rounds: 100
  max_parallel: 0
)";

// Registry for the loop pipeline; the gate consults `verdicts` in turn and
// emits the last one forever.
ModuleRegistry make_loop_registry(std::shared_ptr<std::atomic<int>> gate_calls,
                                  std::vector<std::string> verdicts) {
  ModuleRegistry registry;
  registry.register_module(
      {"extract_mod", ModuleKind::functional, {}, {{"seeds", "seed-list"}}, ""},
      [](const Json&) {
        return outputs_only(Json{{"seeds", Json::array({"s1", "s2"})}});
      });
  registry.register_module(
      {"generate_mod", ModuleKind::functional, {{"seeds", "seed-list"}},
       {{"ideas", "idea-list"}}, ""},
      [](const Json& inputs) {
        return outputs_only(
            Json{{"ideas", Json::array({"idea from " +
                                        inputs.at("seeds")[0]
                                            .get<std::string>()})}});
      });
  registry.register_module(
      {"gate_mod", ModuleKind::prompt, {}, {}, ""},
      [gate_calls, verdicts](const Json&) {
        int call = (*gate_calls)++;
        ModuleResult result;
        result.outputs["verdict"] = "scored";
        result.score = 0.83;
        std::size_t index = std::min(static_cast<std::size_t>(call),
                                     verdicts.size() - 1);
        result.route = verdicts[index];
        return result;
      });
  registry.register_module(
      {"export_mod", ModuleKind::functional, {}, {{"document", "doc"}}, ""},
      [](const Json&) {
        return outputs_only(Json{{"document", "final"}});
      });
  return registry;
}

}  // namespace

TEST_CASE("infer_dependencies extracts implicit edges from input_mapping") {
  PipelineDoc doc = parse_pipeline(
      "nodes:\n"
      "  - id: extract\n"
      "    module: m\n"
      "    input_mapping:\n"
      "      papers: paper_store.papers\n"
      "  - id: b\n"
      "    module: m\n"
      "    input_mapping:\n"
      "      seeds: extract.seeds\n");
  DependencyGraph graph = infer_dependencies(doc);
  CHECK(graph.has_edge("extract", "b"));
  // store alias adds no edge
  CHECK(graph.edges.size() == 1);

  PipelineDoc isolated = parse_pipeline(
      "nodes:\n  - id: a\n    module: m\n  - id: b\n    module: m\n");
  CHECK(infer_dependencies(isolated).edges.empty());
}

TEST_CASE("kahn_schedule produces lexicographic waves") {
  DependencyGraph linear;
  linear.order = {"a", "b", "c"};
  linear.edges = {{"a", "b"}, {"b", "c"}};
  CHECK(kahn_schedule(linear) ==
        std::vector<std::vector<std::string>>{{"a"}, {"b"}, {"c"}});

  DependencyGraph diamond;
  diamond.order = {"a", "b", "c", "d"};
  diamond.edges = {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}};
  CHECK(kahn_schedule(diamond) ==
        std::vector<std::vector<std::string>>{{"a"}, {"b", "c"}, {"d"}});
}

TEST_CASE("kahn_schedule throws CycleDetected naming the cycle") {
  DependencyGraph graph;
  graph.order = {"a", "b"};
  graph.edges = {{"a", "b"}, {"b", "a"}};
  try {
    kahn_schedule(graph);
    FAIL("expected cycle-detected");
  } catch (const Error& e) {
    CHECK(e.code() == errc::cycle_detected);
    CHECK(std::string(e.what()).find("a") != std::string::npos);
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
}

namespace {

// Brute-force oracle: every linear extension of the DAG, by backtracking.
void all_linear_extensions(
    const std::vector<std::string>& nodes,
    const std::set<std::pair<std::string, std::string>>& edges,
    std::vector<std::string>& prefix, std::set<std::string>& used,
    std::set<std::vector<std::string>>& out) {
  if (prefix.size() == nodes.size()) {
    out.insert(prefix);
    return;
  }
  for (const auto& candidate : nodes) {
    if (used.count(candidate)) continue;
    bool ready = true;
    for (const auto& [from, to] : edges) {
      if (to == candidate && !used.count(from)) {
        ready = false;
        break;
      }
    }
    if (!ready) continue;
    used.insert(candidate);
    prefix.push_back(candidate);
    all_linear_extensions(nodes, edges, prefix, used, out);
    prefix.pop_back();
    used.erase(candidate);
  }
}

}  // namespace

TEST_CASE("kahn_schedule output is a valid linear extension (brute force)") {
  std::mt19937 rng(424242);
  std::uniform_int_distribution<int> size_dist(2, 8);
  std::uniform_int_distribution<int> percent(0, 99);
  for (int trial = 0; trial < 40; ++trial) {
    int n = size_dist(rng);
    DependencyGraph graph;
    for (int i = 0; i < n; ++i) graph.order.push_back("n" + std::to_string(i));
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (percent(rng) < 30) {
          graph.edges.insert({graph.order[i], graph.order[j]});
        }
      }
    }
    auto waves = kahn_schedule(graph);
    std::vector<std::string> flat;
    for (const auto& wave : waves) {
      for (const auto& id : wave) flat.push_back(id);
    }
    std::set<std::vector<std::string>> oracle;
    std::vector<std::string> prefix;
    std::set<std::string> used;
    all_linear_extensions(graph.order, graph.edges, prefix, used, oracle);
    REQUIRE(oracle.count(flat) == 1);
    // wave property: all predecessors strictly earlier
    std::map<std::string, int> wave_of;
    for (std::size_t w = 0; w < waves.size(); ++w) {
      for (const auto& id : waves[w]) wave_of[id] = static_cast<int>(w);
    }
    for (const auto& [from, to] : graph.edges) {
      REQUIRE(wave_of.at(from) < wave_of.at(to));
    }
  }
}

TEST_CASE("stop path executes extract, generate, gate, export exactly once") {
  auto calls = std::make_shared<std::atomic<int>>(0);
  ModuleRegistry registry = make_loop_registry(calls, {"stop"});
  PipelineDoc doc = parse_pipeline(loop_pipeline);
  RunState state = execute(doc, registry, nullptr, fast_options());
  REQUIRE(state.completed());
  CHECK(count_runs(state, "extract") == 1);
  CHECK(count_runs(state, "generate") == 1);
  CHECK(count_runs(state, "gate") == 1);
  CHECK(count_runs(state, "export") == 1);
  REQUIRE(state.trace.size() == 4);
  CHECK(state.trace[0].node == "extract");
  CHECK(state.trace[1].node == "generate");
  CHECK(state.trace[2].node == "gate");
  CHECK(state.trace[2].route_taken == "stop");
  CHECK(state.trace[3].node == "export");
  CHECK(state.scores.at("gate") == 0.83);
  CHECK(state.loop_traversals.empty());
}

TEST_CASE("continue twice then stop re-runs the loop body") {
  auto calls = std::make_shared<std::atomic<int>>(0);
  ModuleRegistry registry =
      make_loop_registry(calls, {"continue", "continue", "stop"});
  PipelineDoc doc = parse_pipeline(loop_pipeline);
  RunState state = execute(doc, registry, nullptr, fast_options());
  REQUIRE(state.completed());
  CHECK(count_runs(state, "extract") == 1);
  CHECK(count_runs(state, "generate") == 3);
  CHECK(count_runs(state, "gate") == 3);
  CHECK(count_runs(state, "export") == 1);
  CHECK(state.loop_traversals.at("gate->generate") == 2);
}

TEST_CASE("continue forever halts with RoundsExhausted at exactly max_rounds") {
  auto calls = std::make_shared<std::atomic<int>>(0);
  ModuleRegistry registry = make_loop_registry(calls, {"continue"});
  PipelineDoc doc = parse_pipeline(loop_pipeline);
  doc.config.max_rounds = 7;
  RunState state = execute(doc, registry, nullptr, fast_options());
  REQUIRE_FALSE(state.completed());
  CHECK(state.failure->code == errc::rounds_exhausted);
  CHECK(state.loop_traversals.at("gate->generate") == 7);
  CHECK(count_runs(state, "gate") == 8);  // initial pass + 7 loop re-entries
  CHECK(count_runs(state, "export") == 0);
}

TEST_CASE("routing to an unknown label fails the run") {
  auto calls = std::make_shared<std::atomic<int>>(0);
  ModuleRegistry registry = make_loop_registry(calls, {"sideways"});
  PipelineDoc doc = parse_pipeline(loop_pipeline);
  RunState state = execute(doc, registry, nullptr, fast_options());
  REQUIRE_FALSE(state.completed());
  CHECK(state.failure->code == errc::unknown_route_label);
  CHECK(state.failure->node == "gate");
}

TEST_CASE("returning both _route and _routes is ambiguous") {
  ModuleRegistry registry;
  registry.register_module({"both", ModuleKind::functional, {}, {}, ""},
                           [](const Json&) {
                             ModuleResult result;
                             result.route = "a";
                             result.routes = std::vector<Json>{"x"};
                             return result;
                           });
  PipelineDoc doc = parse_pipeline("nodes:\n  - id: n\n    module: both\n");
  RunState state = execute(doc, registry, nullptr, fast_options());
  REQUIRE_FALSE(state.completed());
  CHECK(state.failure->code == errc::ambiguous_routing);
}

TEST_CASE("score with no route proceeds to topological successors") {
  ModuleRegistry registry;
  registry.register_module({"scorer", ModuleKind::prompt, {}, {}, ""},
                           [](const Json&) {
                             ModuleResult result;
                             result.outputs["seeds"] = Json::array({"s"});
                             result.score = 0.83;
                             return result;
                           });
  registry.register_module({"sink", ModuleKind::functional, {}, {}, ""},
                           [](const Json&) { return ModuleResult{}; });
  PipelineDoc doc = parse_pipeline(
      "nodes:\n"
      "  - id: scorer\n"
      "    module: scorer\n"
      "  - id: sink\n"
      "    module: sink\n"
      "    depends_on: [scorer]\n");
  RunState state = execute(doc, registry, nullptr, fast_options());
  REQUIRE(state.completed());
  CHECK(state.scores.at("scorer") == 0.83);
  CHECK(count_runs(state, "sink") == 1);
}

namespace {

// anchor fans out over a two-node chain (exp -> review) converging on a
// join that also has a non-cloned predecessor.
const char* fanout_pipeline = R"(nodes:
  - id: side
    module: side_mod
  - id: anchor
    module: anchor_mod
  - id: exp
    module: exp_mod
    depends_on: [anchor]
  - id: review
    module: review_mod
    depends_on: [exp]
    input_mapping:
      finding: exp.finding
  - id: join
    module: join_mod
    depends_on: [review, side]
    input_mapping:
      reviews: review.review
config:
  max_rounds: 100
)";

ModuleRegistry make_fanout_registry(int k) {
  ModuleRegistry registry;
  registry.register_module({"side_mod", ModuleKind::functional, {}, {}, ""},
                           [](const Json&) {
                             return outputs_only(Json{{"aux", true}});
                           });
  registry.register_module(
      {"anchor_mod", ModuleKind::functional, {}, {}, ""}, [k](const Json&) {
        ModuleResult result;
        std::vector<Json> items;
        for (int i = 0; i < k; ++i) {
          items.emplace_back("w" + std::to_string(i + 1));
        }
        result.routes = items;
        return result;
      });
  registry.register_module(
      {"exp_mod", ModuleKind::functional, {}, {{"finding", "raw"}}, ""},
      [](const Json& inputs) {
        return outputs_only(
            Json{{"finding", "ran " + inputs.at("route_item").get<std::string>()}});
      });
  registry.register_module(
      {"review_mod", ModuleKind::functional, {{"finding", "raw"}},
       {{"review", "raw"}}, ""},
      [](const Json& inputs) {
        return outputs_only(
            Json{{"review", "ok: " + inputs.at("finding").get<std::string>()}});
      });
  registry.register_module(
      {"join_mod", ModuleKind::functional, {{"reviews", "raw"}}, {}, ""},
      [](const Json& inputs) {
        return outputs_only(Json{{"count", inputs.at("reviews").size()}});
      });
  return registry;
}

}  // namespace

TEST_CASE("fan-out clones the downstream sub-DAG once per element") {
  for (int k : {1, 3, 7}) {
    CAPTURE(k);
    ModuleRegistry registry = make_fanout_registry(k);
    PipelineDoc doc = parse_pipeline(fanout_pipeline);
    RunState state = execute(doc, registry, nullptr, fast_options());
    REQUIRE(state.completed());
    // k clones of the 2-node sub-DAG, join exactly once
    int clone_runs = 0;
    for (const auto& [node, runs] : state.node_exec_counts) {
      if (node.find('#') != std::string::npos) clone_runs += runs;
    }
    CHECK(clone_runs == 2 * k);
    CHECK(count_runs(state, "join") == 1);
    CHECK(count_runs(state, "side") == 1);
    for (int i = 0; i < k; ++i) {
      std::string suffix = "#" + std::to_string(i);
      CHECK(count_runs(state, "exp" + suffix) == 1);
      CHECK(count_runs(state, "review" + suffix) == 1);
      // each clone received its fan-out element
      CHECK(state.context.get("exp" + suffix + ".finding") ==
            "ran w" + std::to_string(i + 1));
    }
    // the join gathered all clone outputs in clone order
    Json joined = state.context.get("join.count");
    CHECK(joined.get<int>() == k);
  }
}

TEST_CASE("clone_set_preview reports the sub-DAG extent up to the join") {
  PipelineDoc doc = parse_pipeline(fanout_pipeline);
  auto set = clone_set_preview(doc, "anchor");
  CHECK(set == std::vector<std::string>{"exp", "review"});
}

TEST_CASE("retry: flaky behavior fails twice then succeeds") {
  ModuleRegistry registry;
  auto attempts = std::make_shared<std::atomic<int>>(0);
  registry.register_module(
      {"flaky", ModuleKind::functional, {}, {}, ""},
      [attempts](const Json&) -> ModuleResult {
        if ((*attempts)++ < 2) throw std::runtime_error("transient");
        return outputs_only(Json{{"ok", true}});
      });
  PipelineDoc doc = parse_pipeline(
      "nodes:\n  - id: n\n    module: flaky\n    retry: 2\n");
  RunState state = execute(doc, registry, nullptr, fast_options());
  REQUIRE(state.completed());
  REQUIRE(state.trace.size() == 3);
  CHECK(state.trace[0].outcome == "error");
  CHECK(state.trace[0].attempt == 1);
  CHECK(state.trace[1].outcome == "error");
  CHECK(state.trace[2].outcome == "ok");
  CHECK(state.trace[2].attempt == 3);
  CHECK(state.context.get("n.ok") == true);
}

TEST_CASE("retry exhaustion fails the run with attempt count") {
  ModuleRegistry registry;
  registry.register_module(
      {"always_fails", ModuleKind::functional, {}, {}, ""},
      [](const Json&) -> ModuleResult { throw std::runtime_error("nope"); });
  PipelineDoc doc = parse_pipeline(
      "nodes:\n  - id: n\n    module: always_fails\n    retry: 1\n");
  RunState state = execute(doc, registry, nullptr, fast_options());
  REQUIRE_FALSE(state.completed());
  CHECK(state.failure->code == errc::node_failure);
  CHECK(state.failure->message.find("2 attempt") != std::string::npos);
  CHECK(state.trace.size() == 2);
}

TEST_CASE("inline timeout is applied to the measured wall clock") {
  ModuleRegistry registry;
  registry.register_module(
      {"slow", ModuleKind::functional, {}, {}, ""}, [](const Json&) {
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        return outputs_only(Json{{"late", true}});
      });
  PipelineDoc doc = parse_pipeline(
      "nodes:\n  - id: n\n    module: slow\n    timeout: 0.005\n");
  RunState state = execute(doc, registry, nullptr, fast_options());
  REQUIRE_FALSE(state.completed());
  CHECK(state.failure->code == errc::node_timeout);
  REQUIRE(state.trace.size() == 1);
  CHECK(state.trace[0].outcome == "timeout");
  CHECK_FALSE(state.context.contains("n.late"));
}

TEST_CASE("reserved keys never reach the context") {
  ModuleRegistry registry;
  registry.register_module(
      {"sneaky", ModuleKind::functional, {}, {}, ""}, [](const Json&) {
        ModuleResult result;
        result.outputs["real"] = 1;
        // a misbehaved module writing reserved keys directly
        result.outputs["_route"] = "hack";
        result.outputs["_metadata"] = Json{{"x", 1}};
        result.score = 0.4;
        result.metadata = Json{{"provenance", "test"}};
        return result;
      });
  PipelineDoc doc = parse_pipeline("nodes:\n  - id: n\n    module: sneaky\n");
  RunState state = execute(doc, registry, nullptr, fast_options());
  REQUIRE(state.completed());
  std::string serialized = state.context.to_json().dump();
  for (const char* reserved : reserved_fields) {
    CHECK(serialized.find("\"" + std::string(reserved) + "\"") ==
          std::string::npos);
  }
  CHECK(state.context.get("n.real") == 1);
}

TEST_CASE("trace entries serialize to the documented JSON lines") {
  auto calls = std::make_shared<std::atomic<int>>(0);
  ModuleRegistry registry = make_loop_registry(calls, {"stop"});
  PipelineDoc doc = parse_pipeline(loop_pipeline);
  RunState state = execute(doc, registry, nullptr, fast_options());
  std::istringstream lines(state.trace_jsonl());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    Json record = Json::parse(line);
    CHECK(record.contains("node"));
    CHECK(record.contains("attempt"));
    CHECK(record.contains("outcome"));
    CHECK(record.contains("duration_ms"));
    CHECK(record.contains("route_taken"));
    ++count;
  }
  CHECK(count == 4);
}

TEST_CASE("wave safety: dependency predecessors always trace earlier") {
  for (int k : {1, 3}) {
    ModuleRegistry registry = make_fanout_registry(k);
    PipelineDoc doc = parse_pipeline(fanout_pipeline);
    RunState state = execute(doc, registry, nullptr, fast_options());
    REQUIRE(state.completed());
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < state.trace.size(); ++i) {
      position[state.trace[i].node] = i;
    }
    // spot-check: every review#i after its exp#i, join after all reviews
    for (int i = 0; i < k; ++i) {
      std::string suffix = "#" + std::to_string(i);
      REQUIRE(position.count("exp" + suffix));
      CHECK(position["exp" + suffix] < position["review" + suffix]);
      CHECK(position["review" + suffix] < position["join"]);
    }
  }
}

TEST_CASE("isolated backend matches the inline final context") {
  auto calls = std::make_shared<std::atomic<int>>(0);
  ModuleRegistry registry = make_loop_registry(calls, {"stop"});
  PipelineDoc doc = parse_pipeline(loop_pipeline);
  RunState inline_state = execute(doc, registry, nullptr, fast_options());

  auto calls2 = std::make_shared<std::atomic<int>>(0);
  ModuleRegistry registry2 = make_loop_registry(calls2, {"stop"});
  RunOptions isolated = fast_options();
  isolated.backend = BackendKind::isolated_backend;
  RunState isolated_state = execute(doc, registry2, nullptr, isolated);

  REQUIRE(inline_state.completed());
  REQUIRE(isolated_state.completed());
  CHECK(inline_state.context.to_json() == isolated_state.context.to_json());

  // fresh worker per node: distinct nonzero pids
  std::set<long> workers;
  for (const auto& entry : isolated_state.trace) {
    CHECK(entry.worker > 0);
    workers.insert(entry.worker);
  }
  CHECK(workers.size() == isolated_state.trace.size());
  for (const auto& entry : inline_state.trace) CHECK(entry.worker == 0);
}

TEST_CASE("isolated backend enforces the timeout by killing the worker") {
  ModuleRegistry registry;
  registry.register_module(
      {"sleeper", ModuleKind::functional, {}, {}, ""}, [](const Json&) {
        std::this_thread::sleep_for(std::chrono::seconds(5));
        return ModuleResult{};
      });
  PipelineDoc doc = parse_pipeline(
      "nodes:\n  - id: n\n    module: sleeper\n    timeout: 0.1\n");
  RunOptions options = fast_options();
  options.backend = BackendKind::isolated_backend;
  auto start = std::chrono::steady_clock::now();
  RunState state = execute(doc, registry, nullptr, options);
  auto elapsed = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  REQUIRE_FALSE(state.completed());
  CHECK(state.failure->code == errc::node_timeout);
  CHECK(elapsed < 3.0);  // the worker was killed, not awaited
}

TEST_CASE("isolated backend respects the max_parallel bound") {
  // Four sleepers record their active interval to files; with a bound of 2
  // no instant may have more than 2 overlapping intervals.
  auto dir = dagkit::test::temp_dir("parallel");
  ModuleRegistry registry;
  registry.register_module(
      {"recorder", ModuleKind::functional, {}, {}, ""},
      [dir](const Json& inputs) {
        auto now_ns = [] {
          return std::chrono::duration_cast<std::chrono::nanoseconds>(
                     std::chrono::steady_clock::now().time_since_epoch())
              .count();
        };
        long long begin = now_ns();
        std::this_thread::sleep_for(std::chrono::milliseconds(60));
        long long end = now_ns();
        std::ofstream out(dir / (inputs.at("tag").get<std::string>() + ".iv"));
        out << begin << " " << end << "\n";
        return ModuleResult{};
      });
  std::string yaml = "nodes:\n";
  for (int i = 0; i < 4; ++i) {
    yaml += "  - id: s" + std::to_string(i) + "\n    module: recorder\n" +
            "    params:\n      tag: s" + std::to_string(i) + "\n";
  }
  yaml += "config:\n  max_parallel: 2\n";
  PipelineDoc doc = parse_pipeline(yaml);
  RunOptions options = fast_options();
  options.backend = BackendKind::isolated_backend;
  RunState state = execute(doc, registry, nullptr, options);
  REQUIRE(state.completed());

  std::vector<std::pair<long long, long long>> intervals;
  for (int i = 0; i < 4; ++i) {
    std::ifstream in(dir / ("s" + std::to_string(i) + ".iv"));
    long long begin = 0, end = 0;
    in >> begin >> end;
    REQUIRE(begin > 0);
    intervals.emplace_back(begin, end);
  }
  for (const auto& [begin, end] : intervals) {
    int overlap = 0;
    for (const auto& [b2, e2] : intervals) {
      if (begin < e2 && b2 < end) ++overlap;
    }
    CHECK(overlap <= 2);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("store writes from isolated workers land durably") {
  auto dir = dagkit::test::temp_dir("isolated_store");
  StoreHub stores(dir);
  ModuleRegistry registry;
  registry.register_module(
      {"emitter", ModuleKind::functional, {}, {{"seeds", "seed-list"}}, ""},
      [](const Json&) {
        return outputs_only(
            Json{{"seeds", Json::array({"alpha seed", "beta seed"})}});
      });
  PipelineDoc doc = parse_pipeline(
      "nodes:\n"
      "  - id: n\n"
      "    module: emitter\n"
      "    output_mapping:\n"
      "      seeds: knowledge_store.seed\n");
  RunOptions options = fast_options();
  options.backend = BackendKind::isolated_backend;
  RunState state = execute(doc, registry, &stores, options);
  REQUIRE(state.completed());
  CHECK(stores.row_count(StoreId::knowledge, "seed") == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("duplicate context writes across nodes fail the run") {
  ModuleRegistry registry;
  auto emit = [](const Json&) {
    ModuleResult result;
    result.outputs["x"] = 1;
    return result;
  };
  registry.register_module({"w1", ModuleKind::functional, {}, {}, ""}, emit);
  registry.register_module({"w2", ModuleKind::functional, {}, {}, ""}, emit);
  PipelineDoc doc = parse_pipeline(
      "nodes:\n"
      "  - id: a\n"
      "    module: w1\n"
      "    output_mapping:\n"
      "      x: shared.value\n"
      "  - id: b\n"
      "    module: w2\n"
      "    depends_on: [a]\n"
      "    output_mapping:\n"
      "      x: shared.value\n");
  RunState state = execute(doc, registry, nullptr, fast_options());
  REQUIRE_FALSE(state.completed());
  CHECK(state.failure->code == errc::duplicate_write);
}

TEST_CASE("empty pipeline executes to completion") {
  ModuleRegistry registry;
  PipelineDoc doc = parse_pipeline("nodes: []\n");
  RunState state = execute(doc, registry, nullptr, fast_options());
  CHECK(state.completed());
  CHECK(state.trace.empty());
}
