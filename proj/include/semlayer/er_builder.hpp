#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "semlayer/identifiers.hpp"
#include "semlayer/io.hpp"
#include "semlayer/llm_gateway.hpp"
#include "semlayer/schema_graph.hpp"
#include "semlayer/view_catalog.hpp"

namespace semlayer {

inline constexpr std::string_view kErVersion = "er_model.v1";
inline constexpr double kDefaultClusterThreshold = 0.35;

using ViewEmbeddings = std::map<std::string, Vector, ILess>;

/// "view <name>", its output columns and origin tables, one per line.
std::string view_descriptor(const CatalogEntry& entry);

/// Throws CatalogError on an empty catalog.
ViewEmbeddings embed_views(const Catalog& catalog, EmbeddingProvider& embedder);

struct ViewCluster {
  std::vector<std::string> members;  // sorted
  Vector centroid;
  std::string theme;  // member closest to the centroid

  friend bool operator==(const ViewCluster&, const ViewCluster&) = default;
};

/// Average-linkage agglomeration over cosine distance (1 - cos). The closest
/// pair of clusters is merged while its distance is <= threshold; ties go to
/// the pair whose first members sort first. Clusters are ordered by first member.
std::vector<ViewCluster> cluster_views(const ViewEmbeddings& embeddings, double threshold = kDefaultClusterThreshold);

struct Attribute {
  std::string name;
  std::vector<std::string> views;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

struct Entity {
  std::string name;
  std::vector<Attribute> attributes;
  NameSet views;
  NameSet origin_tables;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Relationship {
  std::string name;
  std::string from;
  std::string to;
  NameSet views;
  NameSet origin_tables;

  friend bool operator==(const Relationship&, const Relationship&) = default;
};

struct ErModel {
  std::vector<Entity> entities;            // sorted by name
  std::vector<Relationship> relationships;  // sorted by name
  std::vector<ViewCluster> clusters;
  std::vector<std::string> conversations;  // gateway conversation names consulted
  std::vector<std::string> warnings;

  const Entity* find_entity(std::string_view name) const;
  json to_json() const;
  static ErModel from_json(const json& doc);
  /// SHA-256 of the canonical JSON.
  std::string digest() const;

  friend bool operator==(const ErModel&, const ErModel&) = default;
};

/// Trim and collapse internal whitespace.
std::string normalize_label(std::string_view text);

/// Parses a proposal reply: a JSON object, optionally inside a ```json fence.
json parse_reply_json(std::string_view content);

/// Conversations `er_cluster_<k>` (k from 1) propose entities per cluster, then
/// `er_merge` unifies duplicates. View references are checked against the
/// catalog and origin tables are recomputed from lineage.
ErModel extract_er(const std::vector<ViewCluster>& clusters, const Catalog& catalog, Gateway& gateway);

/// Same with one provider per conversation name.
ErModel extract_er(const std::vector<ViewCluster>& clusters, const Catalog& catalog,
                   const std::function<std::unique_ptr<ChatProvider>(std::string_view)>& conversation);

enum class ErFormat { markdown, dot, json };

std::string render_er(const ErModel& model, ErFormat format);

}  // namespace semlayer
