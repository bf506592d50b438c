#include "dagkit/builtins.hpp"

#include <algorithm>
#include <set>

namespace dagkit {

namespace {

ModuleResult with_outputs(Json outputs) {
  ModuleResult result;
  result.outputs = std::move(outputs);
  return result;
}

Json parse_provider_json(const std::string& text) {
  return Json::parse(text, nullptr, true, true);
}

std::string item_text(const Json& item) {
  if (item.is_string()) return item.get<std::string>();
  if (item.is_object()) {
    for (const char* field : {"idea", "text", "title", "seed"}) {
      if (item.contains(field) && item.at(field).is_string()) {
        return item.at(field).get<std::string>();
      }
    }
  }
  return item.dump();
}

// The six cognitive roles and the retrieval scenario each one is wired to.
const std::vector<std::pair<std::string, ScenarioPreset>> cognitive_roles = {
    {"reader", ScenarioPreset::similar},
    {"analyst", ScenarioPreset::similar},
    {"connector", ScenarioPreset::cross_domain},
    {"contrarian", ScenarioPreset::opposite},
    {"synthesizer", ScenarioPreset::counter_intuitive},
    {"critic", ScenarioPreset::similar},
};

}  // namespace

ExtractorPort extractor_from_provider(ProviderHandle provider) {
  return [provider](const IngestItem& raw) {
    std::string response =
        provider->complete("task: extract_insights\nsource: " + raw.text);
    Json insights = parse_provider_json(response);
    std::vector<IngestItem> out;
    for (const auto& entry : insights) {
      IngestItem item;
      item.kind = raw.kind;
      item.text = item_text(entry);
      item.parent_ids = raw.parent_ids;
      item.parent_label = raw.parent_label;
      item.provenance = raw.provenance;
      out.push_back(std::move(item));
    }
    return out;
  };
}

RelationPort relations_from_provider(ProviderHandle provider) {
  RelationPort port;
  port.discover = [provider](const std::vector<KgNode>& batch) {
    if (batch.size() < 2) return std::vector<InternalRelation>{};
    Json texts = Json::array();
    for (const auto& node : batch) texts.push_back(node.text);
    std::string response = provider->complete(
        "task: discover_relations\nitems: " + texts.dump());
    Json relations = parse_provider_json(response);
    std::vector<InternalRelation> out;
    for (const auto& entry : relations) {
      InternalRelation relation;
      relation.src_index = entry.value("src", 0);
      relation.dst_index = entry.value("dst", 0);
      relation.label = entry.value("label", "related");
      if (relation.src_index < batch.size() &&
          relation.dst_index < batch.size() &&
          relation.src_index != relation.dst_index) {
        out.push_back(relation);
      }
    }
    return out;
  };
  port.bucket = [provider](const std::string& a, const std::string& b) {
    return provider->complete("task: bucket_relation\na: " + a + "\nb: " + b);
  };
  return port;
}

void register_builtin_modules(ModuleRegistry& registry,
                              const Services& services) {
  const ProviderHandle provider = services.provider;
  StoreHub* stores = services.stores;
  const std::filesystem::path kg_path = services.kg_path;
  const std::size_t dim = services.embedding_dim;

  registry.register_module(
      {"paper_crawler", ModuleKind::functional,
       {},
       {{"papers", "paper-list"}},
       "produces paper metadata stubs for the configured topic"},
      [](const Json& inputs) {
        int count = inputs.value("count", 3);
        std::string topic = inputs.value("topic", "lattice solvers");
        Json papers = Json::array();
        for (int i = 0; i < count; ++i) {
          papers.push_back(
              Json{{"title", topic + " study " + std::to_string(i + 1)},
                   {"abstract", "Results on " + topic + ", part " +
                                    std::to_string(i + 1) + "."},
                   {"year", 2024 + (i % 3)}});
        }
        return with_outputs(Json{{"papers", papers}});
      });

  registry.register_module(
      {"doc_parser", ModuleKind::functional,
       {{"papers", "paper-list"}},
       {{"docs", "doc-list"}},
       "splits papers into typed text objects with provenance"},
      [](const Json& inputs) {
        Json docs = Json::array();
        int page = 1;
        for (const auto& paper : inputs.at("papers")) {
          std::string title = paper.value("title", "untitled");
          docs.push_back(Json{{"text", title},
                              {"object", "layout"},
                              {"paper_id", title},
                              {"page", page}});
          docs.push_back(Json{{"text", paper.value("abstract", "")},
                              {"object", "ocr"},
                              {"paper_id", title},
                              {"page", page}});
          ++page;
        }
        return with_outputs(Json{{"docs", docs}});
      });

  registry.register_module(
      {"idea_extractor", ModuleKind::prompt,
       {{"papers", "paper-list"}},
       {{"seeds", "seed-list"}},
       "extracts idea seeds from paper metadata"},
      [provider](const Json& inputs) {
        std::string response = provider->complete(
            "task: extract_seeds\npapers: " + inputs.at("papers").dump());
        return with_outputs(Json{{"seeds", parse_provider_json(response)}});
      });

  registry.register_module(
      {"seed_extractor", ModuleKind::prompt,
       {{"docs", "doc-list"}},
       {{"seeds", "seed-list"}},
       "extracts idea seeds from parsed document objects"},
      [provider](const Json& inputs) {
        std::string response = provider->complete(
            "task: extract_seeds\ndocs: " + inputs.at("docs").dump());
        return with_outputs(Json{{"seeds", parse_provider_json(response)}});
      });

  registry.register_module(
      {"idea_generator", ModuleKind::prompt,
       {{"seeds", "seed-list"}},
       {{"ideas", "idea-list"}},
       "expands seeds into concrete research ideas"},
      [provider](const Json& inputs) {
        std::string response = provider->complete(
            "task: generate_ideas\nseeds: " + inputs.at("seeds").dump());
        return with_outputs(Json{{"ideas", parse_provider_json(response)}});
      });

  registry.register_module(
      {"idea_evaluator", ModuleKind::prompt,
       {{"ideas", "idea-list"}},
       {{"evaluations", "evaluation-list"}},
       "reviews ideas for novelty and feasibility"},
      [provider](const Json& inputs) {
        std::string response = provider->complete(
            "task: evaluate_ideas\nideas: " + inputs.at("ideas").dump());
        return with_outputs(
            Json{{"evaluations", parse_provider_json(response)}});
      });

  // Emits _score always and _route from the provider verdict, so a routing
  // node can gate on it. Wire it only where routes are declared.
  registry.register_module(
      {"quality_scorer", ModuleKind::prompt,
       {},
       {{"verdict", "verdict"}},
       "scores the latest ideas; routes continue/stop on the verdict"},
      [provider](const Json& inputs) {
        std::string response = provider->complete(
            "task: score_quality\nideas: " +
            (inputs.contains("ideas") ? inputs.at("ideas").dump() : "[]"));
        Json verdict = parse_provider_json(response);
        ModuleResult result;
        result.outputs["verdict"] = verdict;
        if (verdict.contains("score")) {
          result.score = verdict.at("score").get<double>();
        }
        if (verdict.contains("route")) {
          result.route = verdict.at("route").get<std::string>();
        }
        result.metadata = Json{{"provider", provider->name()}};
        return result;
      });

  registry.register_module(
      {"kg_ingestor", ModuleKind::functional,
       {{"seeds", "seed-list"}, {"papers", "paper-list"}},
       {{"phase_report", "report"}},
       "indexes seeds (and their source papers) into the knowledge graph"},
      [provider, kg_path, dim](const Json& inputs) {
        KgIndex index = KgIndex::load_or_create(kg_path, dim);
        EmbedderPort embedder = make_hash_embedder(dim);

        std::vector<std::string> paper_ids;
        if (inputs.contains("papers")) {
          for (const auto& paper : inputs.at("papers")) {
            std::string title = paper.value("title", item_text(paper));
            std::string id = "paper:" + normalize_key(title);
            if (!index.has_node(id)) {
              KgNode node;
              node.id = id;
              node.kind = NodeKind::paper;
              node.text = title;
              node.embedding = embedder(title);
              index.add_node(std::move(node));
            }
            paper_ids.push_back(id);
          }
        }

        std::vector<IngestItem> batch;
        std::size_t position = 0;
        for (const auto& seed : inputs.at("seeds")) {
          IngestItem item;
          item.kind = NodeKind::idea;
          item.text = item_text(seed);
          if (!paper_ids.empty()) {
            item.parent_ids = {paper_ids[position % paper_ids.size()]};
          }
          batch.push_back(std::move(item));
          ++position;
        }
        PhaseReport report =
            index.ingest_batch(batch, nullptr, embedder,
                               relations_from_provider(provider));
        index.save(kg_path);
        return with_outputs(Json{{"phase_report", report.to_json()},
                                 {"nodes_total", index.node_count()},
                                 {"edges_total", index.edge_count()}});
      });

  // Fans out one branch per cognitive role; each element carries the
  // scenario slice its role is wired to.
  registry.register_module(
      {"kg_retriever", ModuleKind::functional,
       {},
       {{"slices", "slice-list"}},
       "scenario-typed retrieval feeding the cognitive-role fan-out"},
      [kg_path, dim](const Json& inputs) {
        KgIndex index = KgIndex::load_or_create(kg_path, dim);
        int k = inputs.value("k", 3);
        std::string query = inputs.value("query", "research idea seeds");
        EmbedderPort embedder = make_hash_embedder(dim);

        std::vector<Json> elements;
        Json slices = Json::array();
        for (const auto& [role, preset] : cognitive_roles) {
          Json slice = Json::array();
          if (index.node_count() > 0) {
            for (const auto& scored :
                 index.scenario_retrieve(query, preset, k, embedder)) {
              slice.push_back(Json{{"id", scored.id},
                                   {"text", index.node(scored.id).text},
                                   {"score", scored.score}});
            }
          }
          Json element{{"role", role},
                       {"scenario", to_string(preset)},
                       {"slice", slice}};
          slices.push_back(element);
          elements.push_back(element);
        }
        ModuleResult result;
        result.outputs["slices"] = slices;
        result.routes = elements;
        return result;
      });

  registry.register_module(
      {"idea_worker", ModuleKind::prompt,
       {},
       {{"idea", "idea"}},
       "one cognitive role turning its retrieval slice into an idea"},
      [provider](const Json& inputs) {
        Json element = inputs.value("route_item", Json::object());
        std::string role = element.value("role", "reader");
        std::string response = provider->complete(
            "role: " + role + "\ncontext: " +
            element.value("slice", Json::array()).dump());
        Json idea = parse_provider_json(response);
        idea["role"] = role;
        return with_outputs(Json{{"idea", idea}});
      });

  registry.register_module(
      {"result_aggregator", ModuleKind::functional,
       {{"ideas", "idea-list"}},
       {{"ideas", "idea-list"}},
       "deduplicates and ranks the fan-out's converged ideas"},
      [](const Json& inputs) {
        std::set<std::string> seen;
        Json deduped = Json::array();
        for (const auto& idea : inputs.at("ideas")) {
          std::string key = normalize_key(item_text(idea));
          if (key.empty() || !seen.insert(key).second) continue;
          deduped.push_back(idea);
        }
        return with_outputs(
            Json{{"ideas", deduped},
                 {"count", deduped.size()}});
      });

  registry.register_module(
      {"seed_persister", ModuleKind::functional,
       {{"ideas", "idea-list"}},
       {{"persisted", "report"}},
       "persists idea seeds into the knowledge store with dedup"},
      [stores](const Json& inputs) {
        int inserted = 0, deduplicated = 0;
        std::string run_id = inputs.value("run_id", "run");
        if (stores) {
          for (const auto& idea : inputs.at("ideas")) {
            std::string key = item_text(idea);
            if (normalize_key(key).empty()) continue;
            auto outcome = stores->persist_record(
                StoreId::knowledge, "seed", key, idea, run_id);
            (outcome == PersistOutcome::inserted) ? ++inserted
                                                  : ++deduplicated;
          }
        }
        return with_outputs(Json{
            {"persisted",
             Json{{"inserted", inserted}, {"deduplicated", deduplicated}}}});
      });

  registry.register_module(
      {"run_reporter", ModuleKind::functional,
       {},
       {{"report", "report"}},
       "summarizes store and graph growth for the run"},
      [stores, kg_path, dim](const Json&) {
        Json counts = Json::object();
        if (stores) {
          for (StoreId store : all_stores) {
            counts[to_string(store)] = stores->row_count(store);
          }
        }
        KgIndex index = KgIndex::load_or_create(kg_path, dim);
        return with_outputs(
            Json{{"report", Json{{"store_rows", counts},
                                 {"kg_nodes", index.node_count()},
                                 {"kg_edges", index.edge_count()}}}});
      });

  registry.register_module(
      {"result_exporter", ModuleKind::functional,
       {},
       {{"document", "export-doc"}},
       "assembles the final export document from its inputs"},
      [](const Json& inputs) {
        Json document{{"kind", "run-export"}, {"title", "pipeline export"}};
        for (const auto& [field, value] : inputs.items()) {
          if (field == "title") {
            document["title"] = value;
          } else {
            document["content"][field] = value;
          }
        }
        return with_outputs(Json{{"document", document}});
      });
}

}  // namespace dagkit
