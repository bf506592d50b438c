#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dagkit/context.hpp"
#include "dagkit/graph.hpp"
#include "dagkit/pipeline.hpp"
#include "dagkit/registry.hpp"
#include "dagkit/stores.hpp"

namespace dagkit {

/// One execution attempt of one node instance.
struct TraceEntry {
  std::string node;      // effective id
  int attempt = 1;       // 1-based within one scheduling of the node
  std::string outcome;   // ok | error | timeout
  double duration_ms = 0.0;
  std::string route_taken;  // route label, "fan-out[k]", or ""
  long worker = 0;          // worker process id; 0 for the inline backend
  std::optional<double> score;
  std::string error;  // failure detail when outcome != ok

  Json to_json() const;
};

enum class BackendKind {
  inline_backend,   // single-threaded, deterministic, in-process
  isolated_backend  // one disposable worker process per attempt
};

struct RunOptions {
  BackendKind backend = BackendKind::inline_backend;
  std::optional<int> max_parallel;  // overrides config when set
  std::string run_id = "run";
  double retry_delay_seconds = 1.0;  // fixed delay, no backoff
};

struct RunFailure {
  std::string code;  // node-failure | node-timeout | rounds-exhausted | ...
  std::string node;
  std::string message;
};

struct RunState {
  ExecutionContext context;
  std::map<std::string, int> node_exec_counts;   // effective id -> runs
  std::map<std::string, int> loop_traversals;    // "from->to" -> count
  std::set<std::string> frontier;                // ready set at last snapshot
  std::map<std::string, double> scores;          // most recent per node
  std::vector<TraceEntry> trace;
  std::optional<RunFailure> failure;

  bool completed() const { return !failure.has_value(); }
  std::string trace_jsonl() const;
};

/// Effective ids of the fan-out clone set rooted at `anchor`: every node of
/// the downstream sub-DAG, per element index. Exposed for structural tests.
std::vector<std::string> clone_set_preview(const PipelineDoc& doc,
                                           const std::string& anchor);

// Executes a validated pipeline. Node-level failures land in
// RunState::failure rather than being thrown, so the trace and context
// always reflect what actually ran.
RunState execute(const PipelineDoc& doc, const ModuleRegistry& registry,
                 StoreHub* stores, const RunOptions& options = {});

}  // namespace dagkit
