#include "dagkit/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <deque>
#include <list>
#include <sstream>
#include <thread>

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace dagkit {

Json TraceEntry::to_json() const {
  Json out{{"node", node},
           {"attempt", attempt},
           {"outcome", outcome},
           {"duration_ms", duration_ms},
           {"route_taken", route_taken},
           {"worker", worker}};
  if (score) out["score"] = *score;
  if (!error.empty()) out["error"] = error;
  return out;
}

std::string RunState::trace_jsonl() const {
  std::ostringstream out;
  for (const auto& entry : trace) out << entry.to_json().dump() << "\n";
  return out.str();
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

enum class Status { pending, done, skipped };

struct Instance {
  std::string base;
  std::optional<int> clone;
  std::string effective;
  NodeSpec spec;            // mappings rewritten for clones
  std::string anchor;       // effective id of the fan-out anchor, "" for base
  Status status = Status::pending;
  // Route decision of the latest completed execution: target effective id,
  // "" when the node completed without routing, unset while pending.
  std::optional<std::string> selected;
};

struct AttemptOutcome {
  bool ok = false;
  bool timed_out = false;
  ModuleResult result;
  std::string error;
  long worker = 0;
  double duration_ms = 0.0;
};

/// Computes the base-id clone set: nodes reachable from the anchor's
/// dependency successors, shrunk until no member has a predecessor outside
/// the set (the first such node is the join and stays shared).
std::set<std::string> compute_clone_set(const DependencyGraph& deps,
                                        const std::string& anchor) {
  std::set<std::string> set;
  std::deque<std::string> queue;
  for (const auto& [from, to] : deps.edges) {
    if (from == anchor && !set.count(to)) {
      set.insert(to);
      queue.push_back(to);
    }
  }
  while (!queue.empty()) {
    std::string current = queue.front();
    queue.pop_front();
    for (const auto& [from, to] : deps.edges) {
      if (from == current && !set.count(to)) {
        set.insert(to);
        queue.push_back(to);
      }
    }
  }
  bool shrunk = true;
  while (shrunk) {
    shrunk = false;
    for (auto it = set.begin(); it != set.end();) {
      bool outside_pred = false;
      for (const auto& [from, to] : deps.edges) {
        if (to == *it && from != anchor && !set.count(from)) {
          outside_pred = true;
          break;
        }
      }
      if (outside_pred) {
        it = set.erase(it);
        shrunk = true;
      } else {
        ++it;
      }
    }
  }
  return set;
}

std::string rewrite_ref(const std::string& ref,
                        const std::set<std::string>& clone_set, int index) {
  std::string source, field;
  try {
    std::tie(source, field) = resolve_reference(ref);
  } catch (const Error&) {
    return ref;
  }
  if (!clone_set.count(source)) return ref;
  return source + "#" + std::to_string(index) + "." + field;
}

std::string raw_key_of(const Json& item) {
  if (item.is_string()) return item.get<std::string>();
  if (item.is_object()) {
    for (const char* candidate : {"key", "seed", "title", "name", "id",
                                  "text"}) {
      if (item.contains(candidate) && item.at(candidate).is_string()) {
        return item.at(candidate).get<std::string>();
      }
    }
  }
  return item.dump();
}

class Runner {
public:
  Runner(const PipelineDoc& doc, const ModuleRegistry& registry,
         StoreHub* stores, const RunOptions& options)
      : doc_(doc),
        registry_(registry),
        stores_(stores),
        options_(options),
        deps_(infer_dependencies(doc)),
        routes_(classify_route_edges(doc, deps_)),
        state_{ExecutionContext(options.run_id, stores)} {
    for (const auto& node : doc.nodes) {
      Instance instance;
      instance.base = node.id;
      instance.effective = node.id;
      instance.spec = node;
      instances_.push_back(std::move(instance));
    }
    for (const auto& [from, to] : deps_.edges) dep_edges_.insert({from, to});
    for (const auto& edge : routes_.forward) {
      route_edges_.insert({edge.from, edge.to});
    }
    for (const auto& edge : routes_.back) {
      back_edge_pairs_.insert({edge.from, edge.to});
    }
    int bound = options.max_parallel.value_or(doc.config.max_parallel);
    parallel_bound_ = bound <= 0 ? 0 : bound;
  }

  RunState run() {
    while (!state_.failure) {
      propagate_skips();
      std::vector<Instance*> ready = ready_instances();
      state_.frontier.clear();
      for (Instance* instance : ready) {
        state_.frontier.insert(instance->effective);
      }
      if (ready.empty()) {
        if (all_settled()) break;
        fail(errc::execution_stalled, "",
             "no runnable node instance remains but the run is unfinished");
        break;
      }
      std::vector<AttemptOutcome> outcomes = run_batch(ready);
      // Settling can rebuild the instance set (fan-out, loop reset); go by
      // id, never by pointer.
      std::vector<std::string> batch_ids;
      batch_ids.reserve(ready.size());
      for (const Instance* instance : ready) {
        batch_ids.push_back(instance->effective);
      }
      for (std::size_t i = 0; i < batch_ids.size() && !state_.failure; ++i) {
        Instance* instance = find_instance(batch_ids[i]);
        if (instance) settle(*instance, outcomes[i]);
      }
    }
    return std::move(state_);
  }

private:
  Instance* find_instance(const std::string& effective) {
    for (auto& instance : instances_) {
      if (instance.effective == effective) return &instance;
    }
    return nullptr;
  }

  std::vector<std::string> dep_preds(const std::string& effective) const {
    std::vector<std::string> out;
    for (const auto& [from, to] : dep_edges_) {
      if (to == effective) out.push_back(from);
    }
    return out;
  }

  std::vector<std::string> routers_of(const std::string& effective) const {
    std::vector<std::string> out;
    for (const auto& [from, to] : route_edges_) {
      if (to == effective) out.push_back(from);
    }
    return out;
  }

  bool all_settled() const {
    return std::all_of(instances_.begin(), instances_.end(),
                       [](const Instance& i) {
                         return i.status != Status::pending;
                       });
  }

  // A pending node dies when a data predecessor was skipped, or when every
  // router that could activate it has finished without selecting it.
  void propagate_skips() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& instance : instances_) {
        if (instance.status != Status::pending) continue;
        bool dead = false;
        for (const auto& pred : dep_preds(instance.effective)) {
          const Instance* p = find_instance(pred);
          if (p && p->status == Status::skipped) {
            dead = true;
            break;
          }
        }
        if (!dead) {
          auto routers = routers_of(instance.effective);
          if (!routers.empty()) {
            bool selected = false;
            bool undecided = false;
            for (const auto& router : routers) {
              Instance* r = find_instance(router);
              if (!r) continue;
              if (r->status == Status::pending) {
                undecided = true;
              } else if (r->status == Status::done && r->selected &&
                         *r->selected == instance.effective) {
                selected = true;
              }
            }
            if (!selected && !undecided) dead = true;
          }
        }
        if (dead) {
          instance.status = Status::skipped;
          changed = true;
        }
      }
    }
  }

  std::vector<Instance*> ready_instances() {
    std::vector<Instance*> out;
    for (auto& instance : instances_) {
      if (instance.status != Status::pending) continue;
      bool deps_done = true;
      for (const auto& pred : dep_preds(instance.effective)) {
        Instance* p = find_instance(pred);
        if (!p || p->status != Status::done) {
          deps_done = false;
          break;
        }
      }
      if (!deps_done) continue;
      auto routers = routers_of(instance.effective);
      if (!routers.empty()) {
        bool selected = false;
        for (const auto& router : routers) {
          Instance* r = find_instance(router);
          if (r && r->status == Status::done && r->selected &&
              *r->selected == instance.effective) {
            selected = true;
            break;
          }
        }
        if (!selected) continue;
      }
      out.push_back(&instance);
    }
    std::sort(out.begin(), out.end(), [](const Instance* a, const Instance* b) {
      return a->effective < b->effective;
    });
    return out;
  }

  Json assemble_inputs(const Instance& instance) {
    Json inputs = instance.spec.params.is_object() ? instance.spec.params
                                                   : Json::object();
    for (const auto& [field, ref] : instance.spec.input_mapping) {
      auto [source, source_field] = resolve_reference(ref);
      if (store_alias(source)) {
        inputs[field] = state_.context.get_resolved(ref);
        continue;
      }
      if (state_.context.contains(ref)) {
        inputs[field] = state_.context.get(ref);
        continue;
      }
      // A cloned producer scattered its output across `source#k.field`
      // namespaces; the join reads them gathered in clone order.
      auto clone_keys = state_.context.clone_keys(source, source_field);
      if (!clone_keys.empty()) {
        Json gathered = Json::array();
        for (const auto& key : clone_keys) {
          gathered.push_back(state_.context.get(key));
        }
        inputs[field] = std::move(gathered);
        continue;
      }
      throw Error(errc::missing_key,
                  "input '" + field + "' of node '" + instance.effective +
                      "' resolves to absent context key '" + ref + "'");
    }
    if (instance.clone) {
      // Each clone sees its fan-out element.
      if (!inputs.contains("route_item")) {
        inputs["route_item"] = clone_items_.at(instance.anchor)[*instance.clone];
      }
      if (!inputs.contains("route_index")) {
        inputs["route_index"] = *instance.clone;
      }
    }
    return inputs;
  }

  // ---- attempt execution, inline and isolated -----------------------------

  AttemptOutcome run_attempt_inline(const Instance& instance,
                                    const Json& inputs) {
    AttemptOutcome outcome;
    auto start = Clock::now();
    try {
      outcome.result = registry_.invoke(instance.spec.module, inputs);
      outcome.ok = true;
    } catch (const Error& e) {
      outcome.error = e.what();
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    outcome.duration_ms = ms_since(start);
    // The inline backend cannot preempt; the timeout is applied to the
    // measured wall clock of the attempt.
    if (instance.spec.timeout_seconds > 0.0 &&
        outcome.duration_ms > instance.spec.timeout_seconds * 1000.0) {
      outcome.ok = false;
      outcome.timed_out = true;
      outcome.error = "attempt exceeded timeout of " +
                      std::to_string(instance.spec.timeout_seconds) + "s";
    }
    return outcome;
  }

  AttemptOutcome run_attempt_isolated(const Instance& instance,
                                      const Json& inputs) {
    AttemptOutcome outcome;
    int fds[2];
    if (pipe(fds) != 0) {
      outcome.error = "pipe() failed";
      return outcome;
    }
    auto start = Clock::now();
    pid_t pid = fork();
    if (pid < 0) {
      close(fds[0]);
      close(fds[1]);
      outcome.error = "fork() failed";
      return outcome;
    }
    if (pid == 0) {
      // Worker: disposable by construction. Connections must not cross the
      // fork, results leave through the pipe, and nothing survives _exit.
      close(fds[0]);
      if (stores_) stores_->reopen();
      Json envelope;
      try {
        ModuleResult result = registry_.invoke(instance.spec.module, inputs);
        envelope = Json{{"ok", true}, {"result", result.to_wire()}};
      } catch (const std::exception& e) {
        envelope = Json{{"ok", false}, {"error", e.what()}};
      }
      std::string bytes = envelope.dump();
      std::size_t written = 0;
      while (written < bytes.size()) {
        ssize_t n = write(fds[1], bytes.data() + written,
                          bytes.size() - written);
        if (n <= 0) break;
        written += static_cast<std::size_t>(n);
      }
      close(fds[1]);
      _exit(0);
    }

    close(fds[1]);
    outcome.worker = pid;
    std::string buffer;
    bool timed_out = false;
    double timeout_ms = instance.spec.timeout_seconds * 1000.0;
    while (true) {
      double remaining = timeout_ms > 0.0 ? timeout_ms - ms_since(start) : 1000.0;
      if (timeout_ms > 0.0 && remaining <= 0.0) {
        timed_out = true;
        break;
      }
      struct pollfd pfd{fds[0], POLLIN, 0};
      int rc = poll(&pfd, 1, timeout_ms > 0.0
                                ? static_cast<int>(remaining) + 1
                                : 1000);
      if (rc <= 0) continue;
      char chunk[4096];
      ssize_t n = read(fds[0], chunk, sizeof(chunk));
      if (n > 0) {
        buffer.append(chunk, static_cast<std::size_t>(n));
      } else {
        break;  // EOF
      }
    }
    close(fds[0]);
    if (timed_out) {
      kill(pid, SIGKILL);
      waitpid(pid, nullptr, 0);
      outcome.timed_out = true;
      outcome.error = "worker exceeded timeout of " +
                      std::to_string(instance.spec.timeout_seconds) + "s";
      outcome.duration_ms = ms_since(start);
      return outcome;
    }
    int wstatus = 0;
    waitpid(pid, &wstatus, 0);
    outcome.duration_ms = ms_since(start);
    if (buffer.empty()) {
      outcome.error = "worker exited without a result";
      return outcome;
    }
    try {
      Json envelope = Json::parse(buffer);
      if (envelope.at("ok").get<bool>()) {
        outcome.result = ModuleResult::from_wire(envelope.at("result"));
        outcome.ok = true;
      } else {
        outcome.error = envelope.at("error").get<std::string>();
      }
    } catch (const std::exception& e) {
      outcome.error = std::string("malformed worker envelope: ") + e.what();
    }
    return outcome;
  }

  /// Runs the attempt loop (retry + 1 attempts at most) for one instance,
  /// appending one trace entry per attempt.
  AttemptOutcome run_node(Instance& instance) {
    AttemptOutcome outcome;
    Json inputs;
    try {
      inputs = assemble_inputs(instance);
    } catch (const Error& e) {
      outcome.error = e.what();
      state_.trace.push_back({instance.effective, 1, "error", 0.0, "", 0,
                              std::nullopt, outcome.error});
      return outcome;
    }
    int attempts = instance.spec.retry + 1;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      outcome = options_.backend == BackendKind::isolated_backend
                    ? run_attempt_isolated(instance, inputs)
                    : run_attempt_inline(instance, inputs);
      TraceEntry entry{instance.effective,
                       attempt,
                       outcome.ok ? "ok"
                                  : (outcome.timed_out ? "timeout" : "error"),
                       outcome.duration_ms,
                       "",
                       outcome.worker,
                       outcome.ok ? outcome.result.score : std::nullopt,
                       outcome.ok ? "" : outcome.error};
      state_.trace.push_back(std::move(entry));
      if (outcome.ok) break;
      if (attempt < attempts) {
        std::this_thread::sleep_for(std::chrono::duration<double>(
            options_.retry_delay_seconds));
      }
    }
    return outcome;
  }

  // Isolated batches run up to the parallel bound concurrently; attempts
  // and retries still happen inside each node's slot, driven sequentially
  // here to keep all forks on the coordinating thread.
  std::vector<AttemptOutcome> run_batch(std::vector<Instance*>& ready) {
    std::vector<AttemptOutcome> outcomes(ready.size());
    if (options_.backend == BackendKind::inline_backend) {
      for (std::size_t i = 0; i < ready.size(); ++i) {
        outcomes[i] = run_node(*ready[i]);
      }
      return outcomes;
    }
    std::size_t bound = parallel_bound_ == 0
                            ? ready.size()
                            : static_cast<std::size_t>(parallel_bound_);
    for (std::size_t begin = 0; begin < ready.size(); begin += bound) {
      std::size_t end = std::min(begin + bound, ready.size());
      run_isolated_window(ready, outcomes, begin, end);
    }
    return outcomes;
  }

  void run_isolated_window(std::vector<Instance*>& ready,
                           std::vector<AttemptOutcome>& outcomes,
                           std::size_t begin, std::size_t end) {
    struct Slot {
      Instance* instance = nullptr;
      std::size_t index = 0;
      Json inputs;
      int attempt = 0;
      pid_t pid = -1;
      int fd = -1;
      std::string buffer;
      Clock::time_point start;
      Clock::time_point retry_at;
      bool launched = false;
      bool finished = false;
      AttemptOutcome outcome;
    };
    std::vector<Slot> slots;
    for (std::size_t i = begin; i < end; ++i) {
      Slot slot;
      slot.instance = ready[i];
      slot.index = i;
      slot.retry_at = Clock::now();
      try {
        slot.inputs = assemble_inputs(*ready[i]);
      } catch (const Error& e) {
        slot.finished = true;
        slot.outcome.error = e.what();
        state_.trace.push_back({ready[i]->effective, 1, "error", 0.0, "", 0,
                                std::nullopt, slot.outcome.error});
        outcomes[i] = slot.outcome;
      }
      slots.push_back(std::move(slot));
    }

    auto launch = [&](Slot& slot) {
      int fds[2];
      if (pipe(fds) != 0) {
        slot.finished = true;
        slot.outcome.error = "pipe() failed";
        return;
      }
      slot.start = Clock::now();
      ++slot.attempt;
      pid_t pid = fork();
      if (pid < 0) {
        close(fds[0]);
        close(fds[1]);
        slot.finished = true;
        slot.outcome.error = "fork() failed";
        return;
      }
      if (pid == 0) {
        close(fds[0]);
        if (stores_) stores_->reopen();
        Json envelope;
        try {
          ModuleResult result =
              registry_.invoke(slot.instance->spec.module, slot.inputs);
          envelope = Json{{"ok", true}, {"result", result.to_wire()}};
        } catch (const std::exception& e) {
          envelope = Json{{"ok", false}, {"error", e.what()}};
        }
        std::string bytes = envelope.dump();
        std::size_t written = 0;
        while (written < bytes.size()) {
          ssize_t n =
              write(fds[1], bytes.data() + written, bytes.size() - written);
          if (n <= 0) break;
          written += static_cast<std::size_t>(n);
        }
        close(fds[1]);
        _exit(0);
      }
      close(fds[1]);
      slot.pid = pid;
      slot.fd = fds[0];
      slot.buffer.clear();
      slot.launched = true;
    };

    auto reap = [&](Slot& slot, bool timed_out) {
      if (timed_out) {
        kill(slot.pid, SIGKILL);
      }
      waitpid(slot.pid, nullptr, 0);
      close(slot.fd);
      slot.fd = -1;
      AttemptOutcome attempt_outcome;
      attempt_outcome.worker = slot.pid;
      attempt_outcome.duration_ms = ms_since(slot.start);
      slot.pid = -1;
      if (timed_out) {
        attempt_outcome.timed_out = true;
        attempt_outcome.error =
            "worker exceeded timeout of " +
            std::to_string(slot.instance->spec.timeout_seconds) + "s";
      } else if (slot.buffer.empty()) {
        attempt_outcome.error = "worker exited without a result";
      } else {
        try {
          Json envelope = Json::parse(slot.buffer);
          if (envelope.at("ok").get<bool>()) {
            attempt_outcome.result =
                ModuleResult::from_wire(envelope.at("result"));
            attempt_outcome.ok = true;
          } else {
            attempt_outcome.error = envelope.at("error").get<std::string>();
          }
        } catch (const std::exception& e) {
          attempt_outcome.error =
              std::string("malformed worker envelope: ") + e.what();
        }
      }
      state_.trace.push_back(
          {slot.instance->effective, slot.attempt,
           attempt_outcome.ok ? "ok"
                              : (attempt_outcome.timed_out ? "timeout"
                                                           : "error"),
           attempt_outcome.duration_ms, "", attempt_outcome.worker,
           attempt_outcome.ok ? attempt_outcome.result.score : std::nullopt,
           attempt_outcome.ok ? "" : attempt_outcome.error});
      slot.outcome = attempt_outcome;
      if (attempt_outcome.ok ||
          slot.attempt >= slot.instance->spec.retry + 1) {
        slot.finished = true;
        outcomes[slot.index] = attempt_outcome;
      } else {
        slot.launched = false;
        slot.retry_at = Clock::now() + std::chrono::microseconds(
                                           static_cast<long long>(
                                               options_.retry_delay_seconds *
                                               1e6));
      }
    };

    while (true) {
      bool all_done = true;
      auto now = Clock::now();
      for (auto& slot : slots) {
        if (slot.finished) continue;
        all_done = false;
        if (!slot.launched && now >= slot.retry_at) launch(slot);
      }
      if (all_done) break;

      std::vector<struct pollfd> pfds;
      std::vector<Slot*> pfd_slots;
      for (auto& slot : slots) {
        if (!slot.finished && slot.launched && slot.fd >= 0) {
          pfds.push_back({slot.fd, POLLIN, 0});
          pfd_slots.push_back(&slot);
        }
      }
      if (pfds.empty()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        continue;
      }
      poll(pfds.data(), pfds.size(), 20);
      for (std::size_t i = 0; i < pfds.size(); ++i) {
        Slot& slot = *pfd_slots[i];
        if (pfds[i].revents & (POLLIN | POLLHUP)) {
          char chunk[4096];
          ssize_t n = read(slot.fd, chunk, sizeof(chunk));
          if (n > 0) {
            slot.buffer.append(chunk, static_cast<std::size_t>(n));
          } else {
            reap(slot, false);
            continue;
          }
        }
        if (!slot.finished && slot.launched &&
            slot.instance->spec.timeout_seconds > 0.0 &&
            ms_since(slot.start) >
                slot.instance->spec.timeout_seconds * 1000.0) {
          reap(slot, true);
        }
      }
    }
  }

  // ---- routing -------------------------------------------------------------

  void write_outputs(const Instance& instance, const ModuleResult& result) {
    for (const auto& [field, value] : result.outputs.items()) {
      if (is_reserved_field(field)) continue;  // contract hygiene
      state_.context.put(instance.effective + "." + field, value);
    }
    for (const auto& [field, ref] : instance.spec.output_mapping) {
      if (!result.outputs.contains(field)) continue;
      const Json& value = result.outputs.at(field);
      auto [target, target_field] = resolve_reference(ref);
      if (auto store = store_alias(target)) {
        if (!stores_) continue;
        if (value.is_array()) {
          for (const auto& item : value) {
            stores_->persist_record(*store, target_field, raw_key_of(item),
                                    item, options_.run_id);
          }
        } else {
          stores_->persist_record(*store, target_field, raw_key_of(value),
                                  value, options_.run_id);
        }
        continue;
      }
      std::string default_key = instance.effective + "." + field;
      if (ref != default_key) state_.context.put(ref, value);
    }
  }

  void settle(Instance& instance, const AttemptOutcome& outcome) {
    if (!outcome.ok) {
      instance.status = Status::skipped;
      fail(outcome.timed_out ? errc::node_timeout : errc::node_failure,
           instance.effective,
           "node '" + instance.effective + "' failed after " +
               std::to_string(instance.spec.retry + 1) + " attempt(s): " +
               outcome.error);
      return;
    }
    const ModuleResult& result = outcome.result;
    if (result.route && result.routes) {
      instance.status = Status::done;
      fail(errc::ambiguous_routing, instance.effective,
           "node '" + instance.effective +
               "' returned both _route and _routes");
      return;
    }

    try {
      write_outputs(instance, result);
    } catch (const Error& e) {
      instance.status = Status::done;
      fail(e.code(), instance.effective,
           "writing outputs of '" + instance.effective + "' failed: " +
               e.what());
      return;
    }
    ++state_.node_exec_counts[instance.effective];
    if (result.score) state_.scores[instance.effective] = *result.score;
    instance.status = Status::done;
    instance.selected = "";

    if (result.route) {
      apply_single_route(instance, *result.route);
    } else if (result.routes) {
      apply_fan_out(instance, *result.routes);
    }
  }

  void apply_single_route(Instance& instance, const std::string& label) {
    auto it = instance.spec.routes.find(label);
    if (it == instance.spec.routes.end()) {
      fail(errc::unknown_route_label, instance.effective,
           "node '" + instance.effective + "' routed to unknown label '" +
               label + "'");
      return;
    }
    const std::string& target = it->second;
    set_route_taken(instance.effective, label);
    std::string target_base = target.substr(0, target.find('#'));
    if (back_edge_pairs_.count({instance.base, target_base})) {
      std::string key = instance.base + "->" + target_base;
      if (state_.loop_traversals[key] >= doc_.config.max_rounds) {
        fail(errc::rounds_exhausted, instance.effective,
             "back-edge " + key + " reached max_rounds=" +
                 std::to_string(doc_.config.max_rounds));
        return;
      }
      ++state_.loop_traversals[key];
      reset_loop_body(target);
      instance.selected = target;
      return;
    }
    instance.selected = target;
  }

  /// Re-arms the loop body: the back-edge target and everything reachable
  /// from it, clearing their context namespaces and dismantling any fan-out
  /// clones created inside the body.
  void reset_loop_body(const std::string& target) {
    std::set<std::string> body{target};
    std::deque<std::string> queue{target};
    auto all_edges = dep_edges_;
    all_edges.insert(route_edges_.begin(), route_edges_.end());
    while (!queue.empty()) {
      std::string current = queue.front();
      queue.pop_front();
      for (const auto& [from, to] : all_edges) {
        if (from == current && !body.count(to)) {
          body.insert(to);
          queue.push_back(to);
        }
      }
    }
    // Remove clones whose anchor re-runs; their instances and edges are
    // recreated by the next fan-out.
    std::set<std::string> removed;
    for (auto it = instances_.begin(); it != instances_.end();) {
      if (!it->anchor.empty() && body.count(it->anchor)) {
        removed.insert(it->effective);
        state_.context.erase_namespace(it->effective);
        clone_items_.erase(it->effective);
        it = instances_.erase(it);
      } else {
        ++it;
      }
    }
    if (!removed.empty()) {
      for (auto it = dep_edges_.begin(); it != dep_edges_.end();) {
        if (removed.count(it->first) || removed.count(it->second)) {
          it = dep_edges_.erase(it);
        } else {
          ++it;
        }
      }
      for (auto it = route_edges_.begin(); it != route_edges_.end();) {
        if (removed.count(it->first) || removed.count(it->second)) {
          it = route_edges_.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (auto& instance : instances_) {
      if (body.count(instance.effective)) {
        instance.status = Status::pending;
        instance.selected.reset();
        state_.context.erase_namespace(instance.effective);
      }
    }
  }

  void apply_fan_out(Instance& instance, const std::vector<Json>& items) {
    set_route_taken(instance.effective,
                    "fan-out[" + std::to_string(items.size()) + "]");
    std::set<std::string> clone_set = compute_clone_set(deps_, instance.base);
    if (clone_set.empty() || items.empty()) return;

    // The static sub-DAG instances give way to per-element clones; their
    // edges are rebuilt below from the pristine base graph, so a re-fan-out
    // after a loop reset starts from the same topology.
    for (auto it = instances_.begin(); it != instances_.end();) {
      if (clone_set.count(it->effective)) {
        it = instances_.erase(it);
      } else {
        ++it;
      }
    }
    auto erase_edges_touching = [&](std::set<std::pair<std::string,
                                                       std::string>>& edges) {
      for (auto it = edges.begin(); it != edges.end();) {
        std::string from_base = it->first.substr(0, it->first.find('#'));
        std::string to_base = it->second.substr(0, it->second.find('#'));
        if (clone_set.count(from_base) || clone_set.count(to_base)) {
          it = edges.erase(it);
        } else {
          ++it;
        }
      }
    };
    erase_edges_touching(dep_edges_);
    erase_edges_touching(route_edges_);

    std::set<std::pair<std::string, std::string>> base_route_edges;
    for (const auto& edge : routes_.forward) {
      base_route_edges.insert({edge.from, edge.to});
    }

    clone_items_[instance.effective] =
        std::vector<Json>(items.begin(), items.end());
    for (std::size_t index = 0; index < items.size(); ++index) {
      int i = static_cast<int>(index);
      for (const auto& base : clone_set) {
        const NodeSpec* original = doc_.find_node(base);
        if (!original) continue;
        Instance clone;
        clone.base = base;
        clone.clone = i;
        clone.effective = base + "#" + std::to_string(i);
        clone.anchor = instance.effective;
        clone.spec = *original;
        if (find_instance(clone.effective)) {
          fail(errc::clone_collision, clone.effective,
               "effective id '" + clone.effective + "' already exists");
          return;
        }
        for (auto& [field, ref] : clone.spec.input_mapping) {
          ref = rewrite_ref(ref, clone_set, i);
        }
        for (auto& [field, ref] : clone.spec.output_mapping) {
          ref = rewrite_ref(ref, clone_set, i);
        }
        for (auto& [label, target] : clone.spec.routes) {
          if (clone_set.count(target)) {
            target = target + "#" + std::to_string(i);
          }
        }
        for (auto& dep : clone.spec.depends_on) {
          if (clone_set.count(dep)) dep = dep + "#" + std::to_string(i);
        }
        instances_.push_back(std::move(clone));
      }
      auto clone_edge = [&](const std::string& from, const std::string& to,
                            std::set<std::pair<std::string, std::string>>&
                                edges) {
        bool from_in = clone_set.count(from) != 0;
        bool to_in = clone_set.count(to) != 0;
        if (!from_in && !to_in) return;
        std::string new_from =
            from_in ? from + "#" + std::to_string(i)
                    : (from == instance.base ? instance.effective : from);
        std::string new_to = to_in ? to + "#" + std::to_string(i) : to;
        edges.insert({new_from, new_to});
      };
      for (const auto& [from, to] : deps_.edges) {
        clone_edge(from, to, dep_edges_);
      }
      for (const auto& [from, to] : base_route_edges) {
        clone_edge(from, to, route_edges_);
      }
    }
  }

  void set_route_taken(const std::string& effective, const std::string& taken) {
    for (auto it = state_.trace.rbegin(); it != state_.trace.rend(); ++it) {
      if (it->node == effective) {
        it->route_taken = taken;
        return;
      }
    }
  }

  void fail(const std::string& code, const std::string& node,
            const std::string& message) {
    if (!state_.failure) state_.failure = RunFailure{code, node, message};
  }

  const PipelineDoc& doc_;
  const ModuleRegistry& registry_;
  StoreHub* stores_;
  RunOptions options_;
  DependencyGraph deps_;
  RouteClassification routes_;
  RunState state_;
  std::list<Instance> instances_;  // stable references across erase/insert
  std::set<std::pair<std::string, std::string>> dep_edges_;
  std::set<std::pair<std::string, std::string>> route_edges_;
  std::set<std::pair<std::string, std::string>> back_edge_pairs_;
  std::map<std::string, std::vector<Json>> clone_items_;  // anchor -> items
  int parallel_bound_ = 0;
};

}  // namespace

std::vector<std::string> clone_set_preview(const PipelineDoc& doc,
                                           const std::string& anchor) {
  DependencyGraph deps = infer_dependencies(doc);
  auto set = compute_clone_set(deps, anchor);
  return {set.begin(), set.end()};
}

RunState execute(const PipelineDoc& doc, const ModuleRegistry& registry,
                 StoreHub* stores, const RunOptions& options) {
  Runner runner(doc, registry, stores, options);
  return runner.run();
}

}  // namespace dagkit
