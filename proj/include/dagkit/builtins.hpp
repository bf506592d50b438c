#pragma once

#include <filesystem>

#include "dagkit/kg.hpp"
#include "dagkit/provider.hpp"
#include "dagkit/registry.hpp"
#include "dagkit/stores.hpp"

namespace dagkit {

/// Everything the builtin modules need at runtime. Behaviors capture this
/// by value; the store hub outlives the registry.
struct Services {
  ProviderHandle provider;
  StoreHub* stores = nullptr;
  std::filesystem::path kg_path;
  std::size_t embedding_dim = 64;
};

// KG ports backed by a completion provider (the mock in offline runs).
ExtractorPort extractor_from_provider(ProviderHandle provider);
RelationPort relations_from_provider(ProviderHandle provider);

// The module library the shipped pipelines reference: crawler, parser,
// extractor/generator/evaluator chain, KG ingest + retrieval, cognitive
// fan-out worker, aggregator, scorer, persister, reporter, exporter.
void register_builtin_modules(ModuleRegistry& registry,
                              const Services& services);

}  // namespace dagkit
