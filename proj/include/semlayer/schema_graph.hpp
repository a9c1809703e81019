#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semlayer/identifiers.hpp"
#include "semlayer/io.hpp"
#include "semlayer/llm_gateway.hpp"
#include "semlayer/schema_model.hpp"

namespace semlayer {

inline constexpr std::string_view kGraphVersion = "schema_graph.v1";
inline constexpr std::size_t kDefaultBudget = 8;
inline constexpr std::size_t kDefaultSeedCount = 4;

using Vector = std::vector<double>;

struct GraphNode {
  std::string name;
  std::vector<std::string> columns;
  std::string description;  // single-table schema wording, no samples
  std::optional<Vector> feature;
};

/// Undirected edge; `a` sorts before `b` case-insensitively.
struct GraphEdge {
  std::string a;
  std::string b;
  std::vector<ForeignKeyDef> foreign_keys;  // every FK linking the pair, in snapshot order
  std::string description;
  std::optional<Vector> feature;
};

/// Tables as nodes, FK-linked table pairs as edges. Nodes are kept in
/// case-insensitive name order; self-referencing keys add no edge.
class SchemaGraph {
 public:
  SchemaGraph() = default;
  SchemaGraph(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges);

  const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
  const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }

  std::optional<std::size_t> index_of(std::string_view name) const;
  const GraphNode& node(std::size_t i) const { return nodes_.at(i); }
  /// Neighbour indices in name order.
  const std::vector<std::size_t>& neighbours(std::size_t i) const { return adjacency_.at(i); }

  bool has_features() const noexcept;
  std::size_t feature_dimension() const noexcept;

  /// Subgraph induced by `names` (unknown names ignored).
  SchemaGraph induced(const NameSet& names) const;
  /// Connectivity of the subgraph induced by `names`; the empty set is not connected.
  bool is_connected(const NameSet& names) const;

  json to_json() const;
  std::string to_dot() const;

 private:
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::map<std::string, std::size_t, ILess> index_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

SchemaGraph build_graph(const SchemaSnapshot& snapshot);

/// Embeds node descriptions and edge descriptions. Topology is unchanged.
/// Throws ProviderError naming the node or edge whose embedding failed.
SchemaGraph attach_features(const SchemaGraph& graph, EmbeddingProvider& embedder);

/// Node-name sets, each sorted; components ordered by their first name.
std::vector<std::vector<std::string>> connected_components(const SchemaGraph& graph);

struct FocusQuery {
  std::string text;
  Vector embedding;
};

struct SubgraphSample {
  NameSet tables;
  std::string focus;
  std::map<std::string, double, ILess> seed_scores;  // score of every table in the sample
  std::vector<std::string> seeds;                    // retained seeds, best first

  json to_json() const;
  static SubgraphSample from_json(const json& doc);
};

/// Top-k cosine seeds (k = min(budget, seed_count)) restricted to the top
/// seed's component, joined by shortest paths; lowest-scoring seeds are
/// dropped until the union fits the budget. Ties break by name.
SubgraphSample retrieve_subgraph(const SchemaGraph& graph, const FocusQuery& focus, std::size_t budget,
                                 std::size_t seed_count = kDefaultSeedCount);

struct ScopeRequest {
  ColumnSet covered;          // columns already used by earlier sessions
  std::size_t rotation = 0;   // breaks ties left after uncovered ratio, then uncovered count
  std::size_t budget = kDefaultBudget;
  std::size_t seed_count = kDefaultSeedCount;
  std::optional<std::string> focus_override;
};

/// Picks the component with the largest uncovered column fraction, derives a
/// focus from its least covered tables and retrieves a subgraph inside it.
SubgraphSample sample_session_scope(const SchemaGraph& graph, const ScopeRequest& request, EmbeddingProvider& embedder);

}  // namespace semlayer
