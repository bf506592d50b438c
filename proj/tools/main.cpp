#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dagkit/builtins.hpp"
#include "dagkit/runner.hpp"
#include "dagkit/validator.hpp"

namespace {

using namespace dagkit;

constexpr int exit_ok = 0;
constexpr int exit_validation = 1;
constexpr int exit_runtime = 2;
constexpr int exit_usage = 3;

std::string read_file_or_exit(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot read file: " << path << "\n";
    std::exit(exit_usage);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string default_run_id() {
  auto now = std::chrono::system_clock::now().time_since_epoch();
  return "run-" + std::to_string(
                      std::chrono::duration_cast<std::chrono::milliseconds>(
                          now)
                          .count());
}

struct CliConfig {
  std::string provider_name;
  std::string rules_file;
  std::string stores_dir = "dagkit_stores";
};

// One registry per invocation: builtins behind the selected provider.
struct Session {
  Session(const CliConfig& config)
      : stores(config.stores_dir) {
    Json provider_config = Json::object();
    if (!config.rules_file.empty()) {
      provider_config["rules_file"] = config.rules_file;
    }
    Services services;
    services.provider =
        make_provider(config.provider_name, provider_config);
    services.stores = &stores;
    services.kg_path =
        std::filesystem::path(config.stores_dir) / "graph.jsonl";
    register_builtin_modules(registry, services);
  }

  StoreHub stores;
  ModuleRegistry registry;
};

int cmd_validate(const CliConfig& config, const std::string& path) {
  std::string text = read_file_or_exit(path);
  Session session(config);
  ValidationReport report = validate_all(text, session.registry);
  std::cout << report.to_json().dump(2) << "\n";
  return report.passed ? exit_ok : exit_validation;
}

int cmd_run(const CliConfig& config, const std::string& path,
            const std::string& backend, int max_parallel,
            std::string trace_path) {
  std::string text = read_file_or_exit(path);
  Session session(config);

  ValidationReport report = validate_all(text, session.registry);
  if (!report.passed) {
    std::cout << report.to_json().dump(2) << "\n";
    std::cerr << "pipeline failed validation; nothing was executed\n";
    return exit_validation;
  }

  PipelineDoc doc = parse_pipeline(text);
  RunOptions options;
  options.backend = backend == "isolated" ? BackendKind::isolated_backend
                                          : BackendKind::inline_backend;
  if (max_parallel >= 0) options.max_parallel = max_parallel;
  options.run_id = default_run_id();

  RunState state = execute(doc, session.registry, &session.stores, options);

  if (trace_path.empty()) {
    std::filesystem::path p(path);
    trace_path = (p.parent_path() / (p.stem().string() + ".trace.jsonl"))
                     .string();
  }
  std::ofstream trace(trace_path);
  trace << state.trace_jsonl();

  Json summary{{"run_id", options.run_id},
               {"completed", state.completed()},
               {"trace", trace_path},
               {"executed", state.node_exec_counts},
               {"scores", state.scores}};
  if (state.failure) {
    summary["failure"] = Json{{"code", state.failure->code},
                              {"node", state.failure->node},
                              {"message", state.failure->message}};
  }
  std::cout << summary.dump(2) << "\n";
  return state.completed() ? exit_ok : exit_runtime;
}

int cmd_list_modules(const CliConfig& config) {
  Session session(config);
  for (const auto& name : session.registry.names()) {
    std::cout << name << "\n";
  }
  return exit_ok;
}

int cmd_emit_schemas(const CliConfig& config, const std::string& out_path) {
  Session session(config);
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot write: " << out_path << "\n";
    return exit_usage;
  }
  out << session.registry.emit_schemas().dump(2) << "\n";
  return exit_ok;
}

int cmd_export_dot(const std::string& path) {
  std::string text = read_file_or_exit(path);
  PipelineDoc doc;
  try {
    doc = parse_pipeline(text);
  } catch (const Error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return exit_validation;
  }
  DependencyGraph deps = infer_dependencies(doc);
  RouteClassification routes = classify_route_edges(doc, deps);

  std::cout << "digraph pipeline {\n";
  for (const auto& node : doc.nodes) {
    std::cout << "  \"" << node.id << "\" [label=\"" << node.id << "\\n"
              << node.module << "\"];\n";
  }
  for (const auto& [from, to] : deps.edges) {
    std::cout << "  \"" << from << "\" -> \"" << to << "\";\n";
  }
  for (const auto& edge : routes.forward) {
    std::cout << "  \"" << edge.from << "\" -> \"" << edge.to
              << "\" [label=\"" << edge.label << "\"];\n";
  }
  for (const auto& edge : routes.back) {
    std::cout << "  \"" << edge.from << "\" -> \"" << edge.to
              << "\" [style=dashed, label=\"" << edge.label << "\"];\n";
  }
  std::cout << "}\n";
  return exit_ok;
}

int cmd_dump_store(const CliConfig& config, const std::string& store_name) {
  auto store = parse_store_name(store_name);
  if (!store) {
    std::cerr << "unknown store '" << store_name
              << "' (papers, knowledge, evaluations, writing, experiments)\n";
    return exit_usage;
  }
  StoreHub stores(config.stores_dir);
  std::cout << stores.dump(*store).dump(2) << "\n";
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dagkit - declarative DAG pipelines with a four-field agent "
               "contract"};
  app.require_subcommand(1);

  CliConfig config;
  const char* env_provider = std::getenv("DAGKIT_PROVIDER");
  config.provider_name = env_provider ? env_provider : "mock";
  app.add_option("--provider", config.provider_name,
                 "completion provider name (env: DAGKIT_PROVIDER)");
  app.add_option("--rules", config.rules_file,
                 "mock provider rule-table JSON file");
  app.add_option("--stores", config.stores_dir,
                 "directory holding the five store databases and the graph");

  std::string pipeline_path;
  auto* validate =
      app.add_subcommand("validate", "run the four validation passes");
  validate->add_option("file", pipeline_path, "pipeline YAML")->required();

  std::string run_path, backend = "inline", trace_path;
  int max_parallel = -1;
  auto* run = app.add_subcommand("run", "validate, then execute a pipeline");
  run->add_option("file", run_path, "pipeline YAML")->required();
  run->add_option("--backend", backend, "inline | isolated")
      ->check(CLI::IsMember({"inline", "isolated"}));
  run->add_option("--max-parallel", max_parallel,
                  "override config.max_parallel (0 = unbounded)");
  run->add_option("--trace", trace_path,
                  "trace file path (default: <pipeline>.trace.jsonl)");

  auto* list = app.add_subcommand("list-modules", "print registered modules");

  std::string schemas_out;
  auto* emit = app.add_subcommand("emit-schemas",
                                  "write module schemas as JSON");
  emit->add_option("out", schemas_out, "output path")->required();

  std::string dot_path;
  auto* dot = app.add_subcommand("export-dot",
                                 "emit the pipeline graph as DOT");
  dot->add_option("file", dot_path, "pipeline YAML")->required();

  std::string store_name;
  auto* dump = app.add_subcommand("dump-store",
                                  "dump one store as JSON (for fixtures)");
  dump->add_option("store", store_name, "store name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return exit_usage;
  }

  try {
    if (validate->parsed()) return cmd_validate(config, pipeline_path);
    if (run->parsed()) {
      return cmd_run(config, run_path, backend, max_parallel, trace_path);
    }
    if (list->parsed()) return cmd_list_modules(config);
    if (emit->parsed()) return cmd_emit_schemas(config, schemas_out);
    if (dot->parsed()) return cmd_export_dot(dot_path);
    if (dump->parsed()) return cmd_dump_store(config, store_name);
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return exit_runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  return exit_usage;
}
