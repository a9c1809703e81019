#include "semlayer/schema_graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>

#include "semlayer/errors.hpp"

namespace semlayer {

namespace {

std::string dot_quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

bool name_less(std::string_view a, std::string_view b) { return icompare(a, b) == std::strong_ordering::less; }

}  // namespace

SchemaGraph::SchemaGraph(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::sort(nodes_.begin(), nodes_.end(), [](const auto& x, const auto& y) { return name_less(x.name, y.name); });
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i].name, i).second) throw GraphError("duplicate node " + nodes_[i].name);
  }
  adjacency_.assign(nodes_.size(), {});
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto& e : edges_) {
    if (name_less(e.b, e.a)) std::swap(e.a, e.b);
    const auto ia = index_of(e.a), ib = index_of(e.b);
    if (!ia || !ib) throw GraphError("edge endpoint is not a node: " + e.a + " -- " + e.b);
    if (*ia == *ib) throw GraphError("self-loop on " + e.a);
    if (!seen.emplace(*ia, *ib).second) throw GraphError("parallel edge " + e.a + " -- " + e.b);
    adjacency_[*ia].push_back(*ib);
    adjacency_[*ib].push_back(*ia);
  }
  std::sort(edges_.begin(), edges_.end(), [&](const auto& x, const auto& y) {
    return std::pair(*index_of(x.a), *index_of(x.b)) < std::pair(*index_of(y.a), *index_of(y.b));
  });
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

std::optional<std::size_t> SchemaGraph::index_of(std::string_view name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool SchemaGraph::has_features() const noexcept {
  if (nodes_.empty()) return false;
  return std::all_of(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.feature.has_value(); });
}

std::size_t SchemaGraph::feature_dimension() const noexcept {
  return has_features() ? nodes_.front().feature->size() : 0;
}

SchemaGraph SchemaGraph::induced(const NameSet& names) const {
  std::vector<GraphNode> nodes;
  for (const auto& n : nodes_)
    if (names.count(n.name)) nodes.push_back(n);
  std::vector<GraphEdge> edges;
  for (const auto& e : edges_)
    if (names.count(e.a) && names.count(e.b)) edges.push_back(e);
  return SchemaGraph(std::move(nodes), std::move(edges));
}

bool SchemaGraph::is_connected(const NameSet& names) const {
  if (names.empty()) return false;
  std::vector<std::size_t> members;
  for (const auto& n : names) {
    const auto i = index_of(n);
    if (!i) return false;
    members.push_back(*i);
  }
  std::set<std::size_t> allowed(members.begin(), members.end()), reached{members.front()};
  std::deque<std::size_t> queue{members.front()};
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (auto v : adjacency_[u])
      if (allowed.count(v) && reached.insert(v).second) queue.push_back(v);
  }
  return reached.size() == allowed.size();
}

json SchemaGraph::to_json() const {
  json nodes = json::array(), edges = json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({{"name", n.name}, {"columns", n.columns}, {"description", n.description}});
  }
  for (const auto& e : edges_) {
    json fks = json::array();
    for (const auto& fk : e.foreign_keys) fks.push_back(fk.describe());
    edges.push_back({{"source", e.a}, {"target", e.b}, {"foreign_keys", std::move(fks)}, {"description", e.description}});
  }
  const auto components = connected_components(*this);
  return {{"version", kGraphVersion},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"components", components},
          {"feature_dimension", feature_dimension()}};
}

std::string SchemaGraph::to_dot() const {
  std::ostringstream out;
  out << "graph schema {\n  node [shape=box];\n";
  for (const auto& n : nodes_) out << "  " << dot_quote(n.name) << " [label=" << dot_quote(n.name + " (" + std::to_string(n.columns.size()) + ")") << "];\n";
  for (const auto& e : edges_) {
    std::string label;
    for (const auto& fk : e.foreign_keys) {
      if (!label.empty()) label += "\n";
      label += fk.from.column + " -> " + fk.to.column;
    }
    out << "  " << dot_quote(e.a) << " -- " << dot_quote(e.b) << " [label=" << dot_quote(label) << "];\n";
  }
  out << "}\n";
  return out.str();
}

SchemaGraph build_graph(const SchemaSnapshot& snapshot) {
  std::vector<GraphNode> nodes;
  for (const auto& t : snapshot.tables()) {
    GraphNode n;
    n.name = t.name;
    for (const auto& c : t.columns) n.columns.push_back(c.name);
    n.description = schema_wording(snapshot, NameSet{t.name}, false);
    nodes.push_back(std::move(n));
  }
  std::map<std::pair<std::string, std::string>, GraphEdge> by_pair;
  for (const auto& fk : snapshot.foreign_keys()) {
    if (iequals(fk.from.table, fk.to.table)) continue;
    auto a = fk.from.table, b = fk.to.table;
    if (name_less(b, a)) std::swap(a, b);
    auto& e = by_pair[{fold(a), fold(b)}];
    e.a = a;
    e.b = b;
    e.foreign_keys.push_back(fk);
    std::string text = fk.describe();
    const auto* table = snapshot.find_table(fk.from.table);
    if (const auto* col = table ? table->find(fk.from.column) : nullptr; col && !col->description.empty()) {
      text += ": " + col->description;
    }
    if (!e.description.empty()) e.description += "\n";
    e.description += text;
  }
  std::vector<GraphEdge> edges;
  for (auto& [key, e] : by_pair) edges.push_back(std::move(e));
  return SchemaGraph(std::move(nodes), std::move(edges));
}

namespace {

std::vector<Vector> embed_labelled(EmbeddingProvider& embedder, const std::vector<std::string>& texts,
                                   const std::vector<std::string>& labels) {
  if (texts.empty()) return {};
  try {
    return embedder.embed(texts);
  } catch (const Error& batch_error) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
      try {
        embedder.embed({texts[i]});
      } catch (const Error& e) {
        throw ProviderError("embedding failed for " + labels[i] + ": " + e.what());
      }
    }
    throw ProviderError(std::string("embedding failed: ") + batch_error.what());
  }
}

}  // namespace

SchemaGraph attach_features(const SchemaGraph& graph, EmbeddingProvider& embedder) {
  std::vector<GraphNode> nodes = graph.nodes();
  std::vector<GraphEdge> edges = graph.edges();
  std::vector<std::string> texts, labels;
  for (const auto& n : nodes) {
    texts.push_back(n.description);
    labels.push_back("node " + n.name);
  }
  for (const auto& e : edges) {
    texts.push_back(e.description);
    labels.push_back("edge " + e.a + " -- " + e.b);
  }
  auto vectors = embed_labelled(embedder, texts, labels);
  if (vectors.size() != texts.size()) throw GraphError("embedder returned the wrong number of vectors");
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].empty() || vectors[i].size() != vectors.front().size()) {
      throw GraphError("inconsistent feature dimension for " + labels[i]);
    }
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i].feature = std::move(vectors[i]);
  for (std::size_t i = 0; i < edges.size(); ++i) edges[i].feature = std::move(vectors[nodes.size() + i]);
  return SchemaGraph(std::move(nodes), std::move(edges));
}

std::vector<std::vector<std::string>> connected_components(const SchemaGraph& graph) {
  std::vector<std::vector<std::string>> out;
  std::vector<bool> seen(graph.size(), false);
  for (std::size_t s = 0; s < graph.size(); ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> members;
    std::deque<std::size_t> queue{s};
    seen[s] = true;
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      members.push_back(u);
      for (auto v : graph.neighbours(u))
        if (!seen[v]) {
          seen[v] = true;
          queue.push_back(v);
        }
    }
    std::sort(members.begin(), members.end());
    auto& names = out.emplace_back();
    for (auto m : members) names.push_back(graph.node(m).name);
  }
  return out;
}

json SubgraphSample::to_json() const {
  json scores = json::object();
  for (const auto& [name, s] : seed_scores) scores[name] = s;
  return {{"tables", std::vector<std::string>(tables.begin(), tables.end())},
          {"focus", focus},
          {"seeds", seeds},
          {"seed_scores", std::move(scores)}};
}

SubgraphSample SubgraphSample::from_json(const json& doc) {
  SubgraphSample s;
  for (const auto& t : doc.at("tables")) s.tables.insert(t.get<std::string>());
  s.focus = doc.value("focus", "");
  s.seeds = doc.value("seeds", std::vector<std::string>{});
  const json scores = doc.value("seed_scores", json::object());
  for (const auto& [name, v] : scores.items()) s.seed_scores[name] = v.get<double>();
  return s;
}

namespace {

/// Nodes on a shortest path from any member of `from` to `target`, excluding
/// members of `from`. Deterministic: sources and neighbours visited in index order.
std::vector<std::size_t> connect(const SchemaGraph& g, const std::set<std::size_t>& from, std::size_t target) {
  if (from.count(target)) return {};
  std::vector<std::optional<std::size_t>> parent(g.size());
  std::vector<bool> seen(g.size(), false);
  std::deque<std::size_t> queue;
  for (auto s : from) {
    seen[s] = true;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    if (u == target) break;
    for (auto v : g.neighbours(u))
      if (!seen[v]) {
        seen[v] = true;
        parent[v] = u;
        queue.push_back(v);
      }
  }
  if (!seen[target]) throw GraphError("seed " + g.node(target).name + " is unreachable");
  std::vector<std::size_t> path;
  for (std::size_t v = target; !from.count(v); v = *parent[v]) path.push_back(v);
  return path;
}

}  // namespace

SubgraphSample retrieve_subgraph(const SchemaGraph& graph, const FocusQuery& focus, std::size_t budget,
                                 std::size_t seed_count) {
  if (graph.empty()) throw GraphError("cannot retrieve from an empty graph");
  if (!graph.has_features()) throw GraphError("graph has no node features; attach features first");
  if (budget == 0) throw GraphError("budget must be at least 1");
  if (seed_count == 0) throw GraphError("seed count must be at least 1");
  if (focus.embedding.size() != graph.feature_dimension()) {
    throw GraphError("focus embedding dimension " + std::to_string(focus.embedding.size()) +
                     " differs from feature dimension " + std::to_string(graph.feature_dimension()));
  }
  std::vector<double> score(graph.size());
  std::vector<std::size_t> order(graph.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < graph.size(); ++i) score[i] = cosine(*graph.node(i).feature, focus.embedding);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return score[x] > score[y]; });

  const std::size_t k = std::min({budget, seed_count, graph.size()});
  std::vector<std::size_t> seeds(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));

  NameSet top_component;
  for (const auto& c : connected_components(graph))
    if (std::find_if(c.begin(), c.end(), [&](const auto& n) { return iequals(n, graph.node(seeds[0]).name); }) != c.end()) {
      top_component.insert(c.begin(), c.end());
    }
  std::erase_if(seeds, [&](auto s) { return !top_component.count(graph.node(s).name); });

  std::set<std::size_t> chosen;
  while (true) {
    chosen = {seeds.front()};
    for (std::size_t i = 1; i < seeds.size(); ++i) {
      for (auto v : connect(graph, chosen, seeds[i])) chosen.insert(v);
    }
    if (chosen.size() <= budget) break;
    seeds.pop_back();
  }

  SubgraphSample sample;
  sample.focus = focus.text;
  for (auto i : chosen) {
    sample.tables.insert(graph.node(i).name);
    sample.seed_scores[graph.node(i).name] = score[i];
  }
  for (auto s : seeds) sample.seeds.push_back(graph.node(s).name);
  return sample;
}

SubgraphSample sample_session_scope(const SchemaGraph& graph, const ScopeRequest& request, EmbeddingProvider& embedder) {
  if (graph.empty()) throw GraphError("cannot sample a scope from an empty graph");

  auto uncovered = [&](const GraphNode& n) {
    std::size_t u = 0;
    for (const auto& c : n.columns) u += request.covered.count(ColumnRef{n.name, c}) ? 0 : 1;
    return u;
  };

  const auto components = connected_components(graph);
  // compare u1/t1 against u2/t2 without floating point
  std::vector<std::pair<std::size_t, std::size_t>> ratio;
  for (const auto& comp : components) {
    std::size_t u = 0, t = 0;
    for (const auto& name : comp) {
      const auto& n = graph.node(*graph.index_of(name));
      u += uncovered(n);
      t += n.columns.size();
    }
    ratio.emplace_back(u, std::max<std::size_t>(t, 1));
  }
  auto better = [&](std::size_t x, std::size_t y) {
    const auto lhs = ratio[x].first * ratio[y].second, rhs = ratio[y].first * ratio[x].second;
    return lhs > rhs || (lhs == rhs && ratio[x].first > ratio[y].first);
  };
  std::vector<std::size_t> best;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (best.empty() || better(i, best.front())) best = {i};
    else if (!better(best.front(), i)) best.push_back(i);
  }
  const auto& component = components[best[request.rotation % best.size()]];

  std::vector<const GraphNode*> tables;
  for (const auto& name : component) tables.push_back(&graph.node(*graph.index_of(name)));
  std::stable_sort(tables.begin(), tables.end(), [&](const GraphNode* x, const GraphNode* y) {
    return uncovered(*x) * std::max<std::size_t>(y->columns.size(), 1) >
           uncovered(*y) * std::max<std::size_t>(x->columns.size(), 1);
  });
  tables.resize(std::min(tables.size(), std::max<std::size_t>(request.seed_count, 1)));

  FocusQuery focus;
  if (request.focus_override) {
    focus.text = *request.focus_override;
  } else {
    focus.text = "Explore the least covered tables:";
    for (const auto* t : tables) focus.text += " " + t->name;
    focus.text += "\n";
    for (const auto* t : tables) focus.text += t->description;
  }
  const SchemaGraph sub = graph.induced(NameSet(component.begin(), component.end()));
  const SchemaGraph featured = sub.has_features() ? sub : attach_features(sub, embedder);
  const auto vectors = embedder.embed({focus.text});
  if (vectors.size() != 1) throw GraphError("embedder returned no focus vector");
  focus.embedding = vectors.front();
  return retrieve_subgraph(featured, focus, request.budget, request.seed_count);
}

}  // namespace semlayer
