#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagkit/error.hpp"

namespace dagkit {

using Json = nlohmann::json;

enum class NodeKind { paper, idea, experiment, code };
enum class EdgeKind { structural, internal, semantic, walk };

const char* to_string(NodeKind kind);
const char* to_string(EdgeKind kind);
std::optional<NodeKind> parse_node_kind(const std::string& name);
std::optional<EdgeKind> parse_edge_kind(const std::string& name);

/// Where an extracted object came from in its source document.
struct Provenance {
  std::string paper_id;
  int page = 0;
  std::array<double, 4> bbox{0, 0, 0, 0};
};

struct KgNode {
  std::string id;
  NodeKind kind = NodeKind::idea;
  std::string text;
  std::vector<double> embedding;
  std::optional<Provenance> provenance;
};

struct KgEdge {
  std::string src;
  std::string dst;
  EdgeKind kind = EdgeKind::structural;
  double weight = 1.0;  // in [0, 1]
  std::string label;    // optional relation
};

/// A store-level parent/child reference replicated as a structural edge.
struct StoreReference {
  std::string parent_id;
  std::string child_id;
  std::string label;  // e.g. "contains", "derives"
};

struct IngestItem {
  std::string id;  // optional; generated when empty
  NodeKind kind = NodeKind::idea;
  std::string text;
  std::vector<std::string> parent_ids;  // structural references
  std::string parent_label = "contains";
  std::optional<Provenance> provenance;
};

/// Intra-batch relation discovered by the relation port (phase 5); indices
/// point into the batch's freshly written nodes.
struct InternalRelation {
  std::size_t src_index = 0;
  std::size_t dst_index = 0;
  std::string label;
};

// The pluggable behavior boundaries. The mock provider fulfils all three
// offline; deterministic defaults exist for the embedder.
using ExtractorPort =
    std::function<std::vector<IngestItem>(const IngestItem& raw)>;
using EmbedderPort = std::function<std::vector<double>(const std::string&)>;
struct RelationPort {
  std::function<std::vector<InternalRelation>(const std::vector<KgNode>&)>
      discover;  // phase 5, intra-batch
  std::function<std::string(const std::string& a, const std::string& b)>
      bucket;  // phase 7: related | contradicts | unrelated
};

/// Deterministic offline embedder: feature-hashed token 1/2-grams folded
/// into a unit vector.
std::vector<double> hash_embedding(const std::string& text,
                                   std::size_t dim = 64);
EmbedderPort make_hash_embedder(std::size_t dim = 64);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct WalkParams {
  int walks_per_node = 10;
  int walk_length = 8;
  double restart_probability = 0.15;
  int min_covisit = 3;
  int min_distance = 3;  // "long-range" cut
  std::uint64_t seed = 42;
};

struct IngestParams {
  int semantic_k = 5;
  double semantic_threshold = 0.30;
  WalkParams walk;
};

struct PhaseReport {
  int extracted = 0;
  int dedup_dropped = 0;
  int embedded = 0;
  int nodes_written = 0;
  int internal_edges = 0;
  int structural_edges = 0;
  int semantic_edges = 0;
  int walk_edges = 0;
  bool edge_phases_run = false;  // phases 5-8

  Json to_json() const;
};

enum class ScenarioPreset { similar, opposite, cross_domain, counter_intuitive };
const char* to_string(ScenarioPreset preset);
std::optional<ScenarioPreset> parse_preset(const std::string& name);

struct ScoredNode {
  std::string id;
  double score = 0.0;
};

struct Subgraph {
  std::vector<KgNode> nodes;
  std::vector<KgEdge> edges;
};

// Typed graph over papers, ideas, experiments and code. Single writer,
// concurrent readers; retrieval never mutates.
class KgIndex {
public:
  explicit KgIndex(std::size_t embedding_dim = 64)
      : embedding_dim_(embedding_dim) {}

  std::size_t embedding_dim() const { return embedding_dim_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool has_node(const std::string& id) const { return nodes_.count(id) != 0; }
  const KgNode& node(const std::string& id) const;
  std::vector<const KgNode*> all_nodes() const;
  const std::vector<KgEdge>& all_edges() const { return edges_; }

  /// Direct node insertion (embedding dimension is enforced). Returns false
  /// when the id is already present.
  bool add_node(KgNode node);
  /// Direct edge insertion; false when the (src, dst, kind, label) key
  /// already exists.
  bool add_edge(KgEdge edge);

  // Runs the eight indexing phases in order: extract, dedup, embed,
  // write_node, internal_edge, struct_edge, semantic_edge, random_walk.
  // A batch that writes no new node skips phases 5-8.
  PhaseReport ingest_batch(const std::vector<IngestItem>& items,
                           const ExtractorPort& extractor,
                           const EmbedderPort& embedder,
                           const RelationPort& relations,
                           const IngestParams& params = {});

  /// Phase 6 as a standalone operation: one structural edge per reference,
  /// weight 1.0.
  std::vector<KgEdge> struct_edges(const std::vector<StoreReference>& refs);

  // Phase 7 as a standalone operation: top-k cosine candidates above the
  // threshold, bucketed by the relation port into related / contradicts /
  // unrelated.
  std::vector<KgEdge> semantic_edges(const std::vector<std::string>& new_ids,
                                     int k, double threshold,
                                     const RelationPort& relations);

  // Phase 8: weighted random walks over the non-walk edges; co-visited
  // pairs at distance >= min_distance become walk edges. Seeded and
  // reproducible.
  std::vector<KgEdge> random_walk_edges(const WalkParams& params = {});

  std::vector<ScoredNode> scenario_retrieve(const std::string& query,
                                            ScenarioPreset preset, int k,
                                            const EmbedderPort& embedder) const;

  /// BFS along src->dst over only the named edge kinds.
  Subgraph graph_traverse(const std::string& start,
                          const std::set<EdgeKind>& kinds,
                          int max_depth) const;

  // JSON-lines snapshot: a meta record, node records, then edge records.
  std::string export_jsonl() const;
  static KgIndex import_jsonl(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static KgIndex load(const std::filesystem::path& path);
  /// Loads the file when present, otherwise an empty index.
  static KgIndex load_or_create(const std::filesystem::path& path,
                                std::size_t dim = 64);

  std::string to_dot() const;

private:
  std::string insert_node(KgNode node);  // returns final id, "" on duplicate
  std::vector<const KgNode*> sorted_nodes() const;
  int hop_distance(const std::string& from, const std::string& to,
                   const std::set<EdgeKind>& kinds, int cap) const;
  std::string anchor_for(const std::vector<double>& query_embedding) const;

  std::size_t embedding_dim_;
  std::map<std::string, KgNode> nodes_;
  std::vector<KgEdge> edges_;
  std::set<std::tuple<std::string, std::string, int, std::string>> edge_keys_;
  std::map<std::pair<int, std::string>, std::string> dedup_index_;
  std::uint64_t next_id_ = 1;
};

}  // namespace dagkit
