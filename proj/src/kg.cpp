#include "dagkit/kg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

#include "dagkit/stores.hpp"  // normalize_key

namespace dagkit {

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::paper: return "paper";
    case NodeKind::idea: return "idea";
    case NodeKind::experiment: return "experiment";
    case NodeKind::code: return "code";
  }
  return "idea";
}

const char* to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::structural: return "structural";
    case EdgeKind::internal: return "internal";
    case EdgeKind::semantic: return "semantic";
    case EdgeKind::walk: return "walk";
  }
  return "structural";
}

std::optional<NodeKind> parse_node_kind(const std::string& name) {
  for (NodeKind kind : {NodeKind::paper, NodeKind::idea, NodeKind::experiment,
                        NodeKind::code}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

std::optional<EdgeKind> parse_edge_kind(const std::string& name) {
  for (EdgeKind kind : {EdgeKind::structural, EdgeKind::internal,
                        EdgeKind::semantic, EdgeKind::walk}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

const char* to_string(ScenarioPreset preset) {
  switch (preset) {
    case ScenarioPreset::similar: return "similar";
    case ScenarioPreset::opposite: return "opposite";
    case ScenarioPreset::cross_domain: return "cross_domain";
    case ScenarioPreset::counter_intuitive: return "counter_intuitive";
  }
  return "similar";
}

std::optional<ScenarioPreset> parse_preset(const std::string& name) {
  for (ScenarioPreset preset :
       {ScenarioPreset::similar, ScenarioPreset::opposite,
        ScenarioPreset::cross_domain, ScenarioPreset::counter_intuitive}) {
    if (name == to_string(preset)) return preset;
  }
  return std::nullopt;
}

Json PhaseReport::to_json() const {
  return Json{{"extract", extracted},
              {"dedup_dropped", dedup_dropped},
              {"embed", embedded},
              {"write_node", nodes_written},
              {"internal_edge", internal_edges},
              {"struct_edge", structural_edges},
              {"semantic_edge", semantic_edges},
              {"random_walk", walk_edges},
              {"edge_phases_run", edge_phases_run}};
}

namespace {

// FNV-1a, fixed so embeddings are identical across builds and platforms.
std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

}  // namespace

std::vector<double> hash_embedding(const std::string& text, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  std::vector<std::string> tokens = tokenize(text);
  auto fold = [&](const std::string& gram) {
    std::uint64_t h = fnv1a(gram);
    double sign = (h >> 32) & 1 ? 1.0 : -1.0;
    v[h % dim] += sign;
  };
  for (const auto& token : tokens) fold(token);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    fold(tokens[i] + " " + tokens[i + 1]);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    v[0] = 1.0;  // empty text still embeds to a unit vector
    return v;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

EmbedderPort make_hash_embedder(std::size_t dim) {
  return [dim](const std::string& text) { return hash_embedding(text, dim); };
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

const KgNode& KgIndex::node(const std::string& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    throw Error(errc::unknown_node, "no graph node with id '" + id + "'");
  }
  return it->second;
}

std::vector<const KgNode*> KgIndex::all_nodes() const { return sorted_nodes(); }

std::vector<const KgNode*> KgIndex::sorted_nodes() const {
  std::vector<const KgNode*> out;
  out.reserve(nodes_.size());
  for (const auto& [id, node] : nodes_) out.push_back(&node);
  return out;  // map iteration is already id-sorted
}

std::string KgIndex::insert_node(KgNode node) {
  if (node.embedding.size() != embedding_dim_) {
    throw Error(errc::dimension_mismatch,
                "node '" + node.id + "' has embedding dimension " +
                    std::to_string(node.embedding.size()) + ", index expects " +
                    std::to_string(embedding_dim_));
  }
  if (node.id.empty()) {
    node.id = "k" + std::to_string(next_id_++);
  }
  if (nodes_.count(node.id)) return "";
  dedup_index_[{static_cast<int>(node.kind), normalize_key(node.text)}] =
      node.id;
  std::string id = node.id;
  nodes_.emplace(id, std::move(node));
  return id;
}

bool KgIndex::add_node(KgNode node) {
  return !insert_node(std::move(node)).empty();
}

bool KgIndex::add_edge(KgEdge edge) {
  if (edge.src == edge.dst) {
    throw Error(errc::dangling_reference,
                "self edges are not allowed: " + edge.src);
  }
  if (!nodes_.count(edge.src) || !nodes_.count(edge.dst)) {
    throw Error(errc::dangling_reference, "edge " + edge.src + " -> " +
                                              edge.dst +
                                              " references a missing node");
  }
  edge.weight = std::clamp(edge.weight, 0.0, 1.0);
  auto key = std::make_tuple(edge.src, edge.dst, static_cast<int>(edge.kind),
                             edge.label);
  if (!edge_keys_.insert(key).second) return false;
  edges_.push_back(std::move(edge));
  return true;
}

PhaseReport KgIndex::ingest_batch(const std::vector<IngestItem>& items,
                                  const ExtractorPort& extractor,
                                  const EmbedderPort& embedder,
                                  const RelationPort& relations,
                                  const IngestParams& params) {
  PhaseReport report;

  // phase 1: extract
  std::vector<IngestItem> insights;
  for (const auto& raw : items) {
    if (extractor) {
      std::vector<IngestItem> extracted;
      try {
        extracted = extractor(raw);
      } catch (const std::exception& e) {
        throw Error(errc::port_failure,
                    std::string("extract port failed in phase 1: ") +
                        e.what());
      }
      insights.insert(insights.end(), extracted.begin(), extracted.end());
    } else {
      insights.push_back(raw);
    }
  }
  report.extracted = static_cast<int>(insights.size());

  // phase 2: dedup against the index and within the batch
  std::vector<IngestItem> fresh;
  std::set<std::pair<int, std::string>> batch_keys;
  for (auto& insight : insights) {
    auto key = std::make_pair(static_cast<int>(insight.kind),
                              normalize_key(insight.text));
    if (dedup_index_.count(key) || batch_keys.count(key) ||
        (!insight.id.empty() && nodes_.count(insight.id))) {
      ++report.dedup_dropped;
      continue;
    }
    batch_keys.insert(key);
    fresh.push_back(std::move(insight));
  }

  // phase 3: embed
  std::vector<KgNode> new_nodes;
  for (const auto& insight : fresh) {
    if (!embedder) {
      throw Error(errc::port_failure, "phase 3 requires an embedder port");
    }
    KgNode node;
    node.id = insight.id;
    node.kind = insight.kind;
    node.text = insight.text;
    node.provenance = insight.provenance;
    try {
      node.embedding = embedder(insight.text);
    } catch (const std::exception& e) {
      throw Error(errc::port_failure,
                  std::string("embed port failed in phase 3: ") + e.what());
    }
    if (node.embedding.size() != embedding_dim_) {
      throw Error(errc::dimension_mismatch,
                  "embedder returned dimension " +
                      std::to_string(node.embedding.size()) + ", expected " +
                      std::to_string(embedding_dim_));
    }
    ++report.embedded;
    new_nodes.push_back(std::move(node));
  }

  // phase 4: write_node
  std::vector<std::string> new_ids;
  for (auto& node : new_nodes) {
    std::string id = insert_node(std::move(node));
    if (!id.empty()) {
      new_ids.push_back(std::move(id));
      ++report.nodes_written;
    }
  }

  if (report.nodes_written == 0) {
    return report;  // incremental: nothing new, phases 5-8 skipped
  }
  report.edge_phases_run = true;

  // phase 5: internal_edge (intra-batch only)
  std::vector<KgNode> written;
  for (const auto& id : new_ids) written.push_back(nodes_.at(id));
  if (relations.discover) {
    std::vector<InternalRelation> found;
    try {
      found = relations.discover(written);
    } catch (const std::exception& e) {
      throw Error(errc::port_failure,
                  std::string("relation port failed in phase 5: ") + e.what());
    }
    for (const auto& relation : found) {
      if (relation.src_index >= new_ids.size() ||
          relation.dst_index >= new_ids.size() ||
          relation.src_index == relation.dst_index) {
        continue;
      }
      KgEdge edge{new_ids[relation.src_index], new_ids[relation.dst_index],
                  EdgeKind::internal, 0.8, relation.label};
      if (add_edge(std::move(edge))) ++report.internal_edges;
    }
  }

  // phase 6: struct_edge — deterministic replication of store references
  std::vector<StoreReference> refs;
  for (std::size_t i = 0; i < fresh.size() && i < new_ids.size(); ++i) {
    for (const auto& parent : fresh[i].parent_ids) {
      refs.push_back({parent, new_ids[i], fresh[i].parent_label});
    }
  }
  report.structural_edges = static_cast<int>(struct_edges(refs).size());

  // phase 7: semantic_edge
  report.semantic_edges = static_cast<int>(
      semantic_edges(new_ids, params.semantic_k, params.semantic_threshold,
                     relations)
          .size());

  // phase 8: random_walk
  report.walk_edges = static_cast<int>(random_walk_edges(params.walk).size());
  return report;
}

std::vector<KgEdge> KgIndex::struct_edges(
    const std::vector<StoreReference>& refs) {
  std::vector<KgEdge> added;
  for (const auto& ref : refs) {
    if (!nodes_.count(ref.parent_id)) {
      throw Error(errc::dangling_reference,
                  "store reference parent '" + ref.parent_id +
                      "' is not indexed");
    }
    if (!nodes_.count(ref.child_id)) {
      throw Error(errc::dangling_reference,
                  "store reference child '" + ref.child_id +
                      "' is not indexed");
    }
    KgEdge edge{ref.parent_id, ref.child_id, EdgeKind::structural, 1.0,
                ref.label};
    if (add_edge(edge)) added.push_back(edge);
  }
  return added;
}

std::vector<KgEdge> KgIndex::semantic_edges(
    const std::vector<std::string>& new_ids, int k, double threshold,
    const RelationPort& relations) {
  std::vector<KgEdge> added;
  std::set<std::string> fresh(new_ids.begin(), new_ids.end());
  for (const auto& id : new_ids) {
    const KgNode& source = node(id);
    std::vector<ScoredNode> candidates;
    for (const KgNode* other : sorted_nodes()) {
      if (other->id == id) continue;
      double similarity = cosine(source.embedding, other->embedding);
      if (similarity >= threshold) candidates.push_back({other->id, similarity});
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const ScoredNode& a, const ScoredNode& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.id < b.id;
              });
    if (k >= 0 && candidates.size() > static_cast<std::size_t>(k)) {
      candidates.resize(static_cast<std::size_t>(k));
    }
    for (const auto& candidate : candidates) {
      if (!relations.bucket) {
        throw Error(errc::port_failure, "phase 7 requires a bucket port");
      }
      std::string bucket;
      try {
        bucket = relations.bucket(source.text, node(candidate.id).text);
      } catch (const std::exception& e) {
        throw Error(errc::port_failure,
                    std::string("relation port failed in phase 7: ") +
                        e.what());
      }
      if (bucket != "related" && bucket != "contradicts") continue;
      // one semantic edge per unordered pair; the lexicographically smaller
      // id is the source unless the pair ordering is already fixed
      std::string src = id, dst = candidate.id;
      if (fresh.count(dst) && dst < src) std::swap(src, dst);
      KgEdge edge{src, dst, EdgeKind::semantic,
                  std::max(0.0, candidate.score), bucket};
      if (add_edge(edge)) added.push_back(edge);
    }
  }
  return added;
}

std::vector<KgEdge> KgIndex::random_walk_edges(const WalkParams& params) {
  std::vector<KgEdge> added;
  // adjacency over the undirected non-walk graph
  std::map<std::string, std::vector<std::pair<std::string, double>>> adjacency;
  bool any_edge = false;
  for (const auto& edge : edges_) {
    if (edge.kind == EdgeKind::walk) continue;
    adjacency[edge.src].push_back({edge.dst, edge.weight});
    adjacency[edge.dst].push_back({edge.src, edge.weight});
    any_edge = true;
  }
  if (!any_edge || params.restart_probability >= 1.0) return added;

  std::set<EdgeKind> base_kinds{EdgeKind::structural, EdgeKind::internal,
                                EdgeKind::semantic};
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::map<std::pair<std::string, std::string>, int> covisits;
  for (const KgNode* start : sorted_nodes()) {
    if (!adjacency.count(start->id)) continue;
    for (int walk = 0; walk < params.walks_per_node; ++walk) {
      std::string current = start->id;
      std::set<std::string> visited;
      for (int step = 0; step < params.walk_length; ++step) {
        if (unit(rng) < params.restart_probability) {
          current = start->id;
          continue;
        }
        const auto& neighbors = adjacency[current];
        if (neighbors.empty()) break;
        double total = 0.0;
        for (const auto& [next, weight] : neighbors) total += weight;
        if (total <= 0.0) break;
        double pick = unit(rng) * total;
        for (const auto& [next, weight] : neighbors) {
          pick -= weight;
          if (pick <= 0.0) {
            current = next;
            break;
          }
        }
        if (current != start->id) visited.insert(current);
      }
      for (const auto& id : visited) {
        ++covisits[{start->id, id}];
      }
    }
  }

  for (const auto& [pair, count] : covisits) {
    if (count < params.min_covisit) continue;
    const auto& [from, to] = pair;
    if (from >= to) continue;  // canonical direction, one edge per pair
    int distance = hop_distance(from, to, base_kinds, params.min_distance);
    if (distance >= 0 && distance < params.min_distance) continue;
    double weight = std::min(
        1.0, static_cast<double>(count) /
                 std::max(1, params.walks_per_node));
    KgEdge edge{from, to, EdgeKind::walk, weight, "co-visit"};
    if (add_edge(edge)) added.push_back(edge);
  }
  return added;
}

int KgIndex::hop_distance(const std::string& from, const std::string& to,
                          const std::set<EdgeKind>& kinds, int cap) const {
  if (from == to) return 0;
  // undirected BFS; returns -1 when `to` is farther than `cap` hops
  std::map<std::string, int> distance{{from, 0}};
  std::deque<std::string> queue{from};
  while (!queue.empty()) {
    std::string current = queue.front();
    queue.pop_front();
    int d = distance[current];
    if (d >= cap) continue;
    for (const auto& edge : edges_) {
      if (!kinds.count(edge.kind)) continue;
      std::string next;
      if (edge.src == current) next = edge.dst;
      else if (edge.dst == current) next = edge.src;
      else continue;
      if (distance.count(next)) continue;
      distance[next] = d + 1;
      if (next == to) return d + 1;
      queue.push_back(next);
    }
  }
  return -1;
}

std::string KgIndex::anchor_for(
    const std::vector<double>& query_embedding) const {
  std::string best;
  double best_score = -2.0;
  for (const KgNode* candidate : sorted_nodes()) {
    double score = cosine(query_embedding, candidate->embedding);
    if (score > best_score) {
      best_score = score;
      best = candidate->id;
    }
  }
  return best;
}

std::vector<ScoredNode> KgIndex::scenario_retrieve(
    const std::string& query, ScenarioPreset preset, int k,
    const EmbedderPort& embedder) const {
  if (nodes_.empty()) {
    throw Error(errc::empty_index, "scenario retrieval over an empty index");
  }
  std::vector<double> query_embedding = embedder(query);
  if (query_embedding.size() != embedding_dim_) {
    throw Error(errc::dimension_mismatch, "query embedding dimension differs");
  }
  auto cap = [&](std::vector<ScoredNode> result) {
    if (k >= 0 && result.size() > static_cast<std::size_t>(k)) {
      result.resize(static_cast<std::size_t>(k));
    }
    return result;
  };

  if (preset == ScenarioPreset::similar) {
    std::vector<ScoredNode> scored;
    for (const KgNode* candidate : sorted_nodes()) {
      scored.push_back(
          {candidate->id, cosine(query_embedding, candidate->embedding)});
    }
    std::sort(scored.begin(), scored.end(),
              [](const ScoredNode& a, const ScoredNode& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.id < b.id;
              });
    return cap(std::move(scored));
  }

  const std::string anchor = anchor_for(query_embedding);
  if (preset == ScenarioPreset::opposite) {
    std::vector<ScoredNode> scored;
    for (const auto& edge : edges_) {
      if (edge.kind != EdgeKind::semantic || edge.label != "contradicts")
        continue;
      if (edge.src == anchor) scored.push_back({edge.dst, edge.weight});
      else if (edge.dst == anchor) scored.push_back({edge.src, edge.weight});
    }
    std::sort(scored.begin(), scored.end(),
              [](const ScoredNode& a, const ScoredNode& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.id < b.id;
              });
    return cap(std::move(scored));
  }

  if (preset == ScenarioPreset::cross_domain) {
    std::vector<ScoredNode> scored;
    for (const auto& edge : edges_) {
      if (edge.kind != EdgeKind::walk) continue;
      if (edge.src == anchor) scored.push_back({edge.dst, edge.weight});
      else if (edge.dst == anchor) scored.push_back({edge.src, edge.weight});
    }
    std::sort(scored.begin(), scored.end(),
              [](const ScoredNode& a, const ScoredNode& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.id < b.id;
              });
    return cap(std::move(scored));
  }

  // counter_intuitive: semantic outliers among the anchor's 2-hop
  // structural/internal neighborhood — the lowest decile by similarity.
  const KgNode& anchor_node = node(anchor);
  std::set<EdgeKind> near_kinds{EdgeKind::structural, EdgeKind::internal};
  std::vector<ScoredNode> candidates;
  for (const KgNode* candidate : sorted_nodes()) {
    if (candidate->id == anchor) continue;
    int distance = hop_distance(anchor, candidate->id, near_kinds, 2);
    if (distance < 0) continue;
    candidates.push_back(
        {candidate->id, cosine(anchor_node.embedding, candidate->embedding)});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const ScoredNode& a, const ScoredNode& b) {
              if (a.score != b.score) return a.score < b.score;  // outliers first
              return a.id < b.id;
            });
  std::size_t decile =
      std::max<std::size_t>(1, candidates.size() / 10);
  if (candidates.size() > decile) candidates.resize(decile);
  return cap(std::move(candidates));
}

Subgraph KgIndex::graph_traverse(const std::string& start,
                                 const std::set<EdgeKind>& kinds,
                                 int max_depth) const {
  if (!nodes_.count(start)) {
    throw Error(errc::unknown_node, "traversal start '" + start +
                                        "' is not in the index");
  }
  Subgraph out;
  std::map<std::string, int> depth{{start, 0}};
  std::deque<std::string> queue{start};
  std::set<std::tuple<std::string, std::string, int, std::string>> taken;
  while (!queue.empty()) {
    std::string current = queue.front();
    queue.pop_front();
    int d = depth[current];
    if (d >= max_depth) continue;
    for (const auto& edge : edges_) {
      if (!kinds.count(edge.kind) || edge.src != current) continue;
      auto key = std::make_tuple(edge.src, edge.dst,
                                 static_cast<int>(edge.kind), edge.label);
      if (taken.insert(key).second) out.edges.push_back(edge);
      if (!depth.count(edge.dst)) {
        depth[edge.dst] = d + 1;
        queue.push_back(edge.dst);
      }
    }
  }
  for (const auto& [id, d] : depth) {
    (void)d;
    out.nodes.push_back(nodes_.at(id));
  }
  return out;
}

namespace {

Json node_to_json(const KgNode& node) {
  Json record{{"type", "node"},
              {"id", node.id},
              {"kind", to_string(node.kind)},
              {"text", node.text},
              {"embedding", node.embedding}};
  if (node.provenance) {
    record["provenance"] = Json{{"paper_id", node.provenance->paper_id},
                                {"page", node.provenance->page},
                                {"bbox", node.provenance->bbox}};
  }
  return record;
}

Json edge_to_json(const KgEdge& edge) {
  return Json{{"type", "edge"},   {"src", edge.src},
              {"dst", edge.dst},  {"kind", to_string(edge.kind)},
              {"weight", edge.weight}, {"label", edge.label}};
}

}  // namespace

std::string KgIndex::export_jsonl() const {
  std::ostringstream out;
  out << Json{{"type", "meta"}, {"dim", embedding_dim_}}.dump() << "\n";
  for (const KgNode* node : sorted_nodes()) {
    out << node_to_json(*node).dump() << "\n";
  }
  for (const auto& edge : edges_) {
    out << edge_to_json(edge).dump() << "\n";
  }
  return out.str();
}

KgIndex KgIndex::import_jsonl(const std::string& text) {
  KgIndex index;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json record = Json::parse(line);
    std::string type = record.at("type").get<std::string>();
    if (type == "meta") {
      index = KgIndex(record.at("dim").get<std::size_t>());
    } else if (type == "node") {
      KgNode node;
      node.id = record.at("id").get<std::string>();
      node.kind = parse_node_kind(record.at("kind").get<std::string>())
                      .value_or(NodeKind::idea);
      node.text = record.at("text").get<std::string>();
      node.embedding = record.at("embedding").get<std::vector<double>>();
      if (record.contains("provenance")) {
        Provenance p;
        p.paper_id = record["provenance"].at("paper_id").get<std::string>();
        p.page = record["provenance"].at("page").get<int>();
        p.bbox = record["provenance"].at("bbox").get<std::array<double, 4>>();
        node.provenance = p;
      }
      index.add_node(std::move(node));
    } else if (type == "edge") {
      KgEdge edge;
      edge.src = record.at("src").get<std::string>();
      edge.dst = record.at("dst").get<std::string>();
      edge.kind = parse_edge_kind(record.at("kind").get<std::string>())
                      .value_or(EdgeKind::structural);
      edge.weight = record.at("weight").get<double>();
      edge.label = record.value("label", "");
      index.add_edge(std::move(edge));
    }
  }
  return index;
}

void KgIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw Error(errc::store_io, "cannot write graph file " + path.string());
  }
  out << export_jsonl();
}

KgIndex KgIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(errc::store_io, "cannot read graph file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return import_jsonl(buffer.str());
}

KgIndex KgIndex::load_or_create(const std::filesystem::path& path,
                                std::size_t dim) {
  if (std::filesystem::exists(path)) return load(path);
  return KgIndex(dim);
}

std::string KgIndex::to_dot() const {
  std::ostringstream out;
  out << "digraph knowledge {\n";
  for (const KgNode* node : sorted_nodes()) {
    out << "  \"" << node->id << "\" [label=\"" << node->id << "\\n("
        << to_string(node->kind) << ")\"];\n";
  }
  for (const auto& edge : edges_) {
    const char* style = "solid";
    if (edge.kind == EdgeKind::internal) style = "dotted";
    if (edge.kind == EdgeKind::semantic) style = "dashed";
    if (edge.kind == EdgeKind::walk) style = "bold";
    out << "  \"" << edge.src << "\" -> \"" << edge.dst << "\" [style="
        << style << ", label=\"" << (edge.label.empty() ? to_string(edge.kind)
                                                        : edge.label)
        << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace dagkit
