#include "semlayer/er_builder.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <sstream>

#include "semlayer/errors.hpp"

namespace semlayer {

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

template <typename Set>
std::vector<std::string> to_vector(const Set& s) {
  return std::vector<std::string>(s.begin(), s.end());
}

NameSet lineage_tables(const CatalogEntry& e) {
  NameSet tables;
  for (const auto& c : e.lineage.coverage()) tables.insert(c.table);
  return tables;
}

}  // namespace

std::string view_descriptor(const CatalogEntry& entry) {
  return "view " + entry.view.name + "\ncolumns: " + join(entry.view.output_columns, ", ") +
         "\norigin tables: " + join(to_vector(lineage_tables(entry)), ", ") + "\n";
}

ViewEmbeddings embed_views(const Catalog& catalog, EmbeddingProvider& embedder) {
  if (catalog.empty()) throw CatalogError("cannot embed an empty catalog");
  std::vector<std::string> names, texts;
  for (const auto& [name, e] : catalog.entries()) {
    names.push_back(name);
    texts.push_back(view_descriptor(e));
  }
  auto vectors = embedder.embed(texts);
  if (vectors.size() != names.size()) throw ProviderError("embedder returned the wrong number of vectors");
  ViewEmbeddings out;
  const auto dimension = vectors.front().size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (vectors[i].size() != dimension || vectors[i].empty()) {
      throw ProviderError("inconsistent embedding dimension for view " + names[i]);
    }
    out.emplace(names[i], std::move(vectors[i]));
  }
  return out;
}

std::vector<ViewCluster> cluster_views(const ViewEmbeddings& embeddings, double threshold) {
  std::vector<std::string> names;
  std::vector<const Vector*> vecs;
  for (const auto& [name, v] : embeddings) {
    names.push_back(name);
    vecs.push_back(&v);
  }
  const std::size_t n = names.size();
  // pairwise distance sums between clusters; average = sum / (|a| * |b|)
  std::vector<std::vector<double>> sum(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sum[i][j] = sum[j][i] = 1.0 - cosine(*vecs[i], *vecs[j]);

  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<bool> alive(n, true);
  constexpr double kTolerance = 1e-12;
  while (true) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = n, bj = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!alive[j]) continue;
        const double d = sum[i][j] / static_cast<double>(members[i].size() * members[j].size());
        if (d < best - kTolerance) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == n || best > threshold + kTolerance) break;
    // members[i] always holds its smallest index, so index order is first-member order
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == bi || k == bj) continue;
      sum[bi][k] = sum[k][bi] = sum[bi][k] + sum[bj][k];
    }
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    std::sort(members[bi].begin(), members[bi].end());
    members[bj].clear();
    alive[bj] = false;
  }

  std::vector<ViewCluster> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!alive[i]) continue;
    ViewCluster c;
    Vector centroid(vecs[members[i].front()]->size(), 0.0);
    for (auto m : members[i]) {
      c.members.push_back(names[m]);
      for (std::size_t d = 0; d < centroid.size(); ++d) centroid[d] += (*vecs[m])[d];
    }
    for (auto& x : centroid) x /= static_cast<double>(members[i].size());
    double best = -2.0;
    for (auto m : members[i]) {
      const double s = cosine(*vecs[m], centroid);
      if (s > best + kTolerance) {
        best = s;
        c.theme = names[m];
      }
    }
    c.centroid = std::move(centroid);
    out.push_back(std::move(c));
  }
  return out;
}

std::string normalize_label(std::string_view text) {
  std::string out;
  bool space = false;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += ch;
  }
  return out;
}

json parse_reply_json(std::string_view content) {
  std::string_view body = content;
  if (const auto fence = content.find("```"); fence != std::string_view::npos) {
    const auto start = content.find('\n', fence);
    const auto end = start == std::string_view::npos ? std::string_view::npos : content.find("```", start);
    if (end != std::string_view::npos) body = content.substr(start + 1, end - start - 1);
  } else {
    const auto open = content.find('{'), close = content.rfind('}');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
      body = content.substr(open, close - open + 1);
    }
  }
  auto doc = json::parse(body);
  if (!doc.is_object()) throw json::type_error::create(302, "reply is not a JSON object", nullptr);
  return doc;
}

const Entity* ErModel::find_entity(std::string_view name) const {
  for (const auto& e : entities)
    if (iequals(e.name, name)) return &e;
  return nullptr;
}

json ErModel::to_json() const {
  json ents = json::array(), rels = json::array(), cls = json::array();
  for (const auto& e : entities) {
    json attrs = json::array();
    for (const auto& a : e.attributes) attrs.push_back({{"name", a.name}, {"views", a.views}});
    ents.push_back({{"name", e.name},
                    {"attributes", std::move(attrs)},
                    {"views", to_vector(e.views)},
                    {"origin_tables", to_vector(e.origin_tables)}});
  }
  for (const auto& r : relationships) {
    rels.push_back({{"name", r.name},
                    {"from", r.from},
                    {"to", r.to},
                    {"views", to_vector(r.views)},
                    {"origin_tables", to_vector(r.origin_tables)}});
  }
  for (const auto& c : clusters) cls.push_back({{"members", c.members}, {"theme", c.theme}});
  return {{"version", kErVersion},
          {"entities", std::move(ents)},
          {"relationships", std::move(rels)},
          {"provenance", {{"clusters", std::move(cls)}, {"conversations", conversations}, {"warnings", warnings}}}};
}

ErModel ErModel::from_json(const json& doc) {
  if (doc.value("version", "") != kErVersion) throw Error("ER model version mismatch: expected er_model.v1");
  ErModel m;
  auto names = [](const json& arr) {
    NameSet s;
    for (const auto& v : arr) s.insert(v.get<std::string>());
    return s;
  };
  for (const auto& e : doc.at("entities")) {
    Entity ent{e.at("name"), {}, names(e.at("views")), names(e.at("origin_tables"))};
    for (const auto& a : e.at("attributes")) ent.attributes.push_back({a.at("name"), a.at("views")});
    m.entities.push_back(std::move(ent));
  }
  for (const auto& r : doc.at("relationships")) {
    m.relationships.push_back({r.at("name"), r.at("from"), r.at("to"), names(r.at("views")), names(r.at("origin_tables"))});
  }
  const auto& p = doc.at("provenance");
  for (const auto& c : p.at("clusters")) m.clusters.push_back({c.at("members"), {}, c.at("theme")});
  m.conversations = p.at("conversations").get<std::vector<std::string>>();
  m.warnings = p.at("warnings").get<std::vector<std::string>>();
  return m;
}

std::string ErModel::digest() const { return sha256_hex(canonical_json(to_json())); }

namespace {

std::string cluster_prompt(const ViewCluster& cluster, const Catalog& catalog) {
  std::ostringstream out;
  out << "You organise validated database views into an entity-relationship model. Using only the views below, "
         "name the entities they describe with their attributes, and the relationships between entities. Reply "
         "with a single JSON object of the form {\"entities\": [{\"name\": \"...\", \"attributes\": [{\"name\": "
         "\"...\", \"views\": [\"...\"]}], \"views\": [\"...\"]}], \"relationships\": [{\"name\": \"...\", "
         "\"from\": \"...\", \"to\": \"...\", \"views\": [\"...\"]}]}. Refer to views by their exact names.\n\nViews:\n";
  for (const auto& m : cluster.members) out << view_descriptor(*catalog.find(m)) << "\n";
  return out.str();
}

std::string merge_prompt(const std::vector<Entity>& entities) {
  std::ostringstream out;
  out << "Entities were proposed separately for groups of views. Identify entities that denote the same concept. "
         "Reply with a single JSON object {\"merge\": [{\"name\": \"...\", \"entities\": [\"...\", \"...\"]}]}; "
         "use an empty list when nothing should be merged.\n\nEntities:\n";
  for (const auto& e : entities) {
    std::vector<std::string> attrs;
    for (const auto& a : e.attributes) attrs.push_back(a.name);
    out << "- " << e.name << ": " << join(attrs, ", ") << "\n";
  }
  return out.str();
}

struct Builder {
  const Catalog& catalog;
  ErModel model;

  /// Keeps names of catalog views; warns about the rest.
  NameSet known_views(const json& list, const std::string& context) {
    NameSet out;
    if (!list.is_array()) return out;
    for (const auto& v : list) {
      if (!v.is_string()) continue;
      const auto name = normalize_label(v.get<std::string>());
      if (const auto* e = catalog.find(name)) out.insert(e->view.name);
      else model.warnings.push_back(context + ": dropped unknown view " + name);
    }
    return out;
  }

  void merge_attributes(Entity& into, const std::vector<Attribute>& attrs) {
    for (const auto& a : attrs) {
      auto it = std::find_if(into.attributes.begin(), into.attributes.end(), [&](const auto& x) { return iequals(x.name, a.name); });
      if (it == into.attributes.end()) {
        into.attributes.push_back(a);
        continue;
      }
      NameSet v(it->views.begin(), it->views.end());
      v.insert(a.views.begin(), a.views.end());
      it->views = to_vector(v);
    }
  }

  void add_entity(std::vector<Entity>& entities, Entity e) {
    auto it = std::find_if(entities.begin(), entities.end(), [&](const auto& x) { return iequals(x.name, e.name); });
    if (it == entities.end()) {
      entities.push_back(std::move(e));
      return;
    }
    it->views.insert(e.views.begin(), e.views.end());
    merge_attributes(*it, e.attributes);
  }

  void absorb_proposal(const json& doc, const std::string& context, std::vector<Entity>& entities,
                       std::vector<Relationship>& relationships) {
    for (const auto& item : doc.value("entities", json::array())) {
      if (!item.is_object() || !item.contains("name") || !item["name"].is_string()) continue;
      Entity e;
      e.name = normalize_label(item["name"].get<std::string>());
      if (e.name.empty()) continue;
      const auto where = context + " entity " + e.name;
      e.views = known_views(item.value("views", json::array()), where);
      for (const auto& a : item.value("attributes", json::array())) {
        Attribute attr;
        json listed = json::array();
        if (a.is_string()) {
          attr.name = normalize_label(a.get<std::string>());
        } else if (a.is_object() && a.contains("name") && a["name"].is_string()) {
          attr.name = normalize_label(a["name"].get<std::string>());
          listed = a.value("views", json::array());
        }
        if (attr.name.empty()) continue;
        const auto views = known_views(listed, where + " attribute " + attr.name);
        if (listed.is_array() && !listed.empty() && views.empty()) continue;
        attr.views = to_vector(views);
        e.views.insert(views.begin(), views.end());
        merge_attributes(e, {attr});
      }
      if (e.views.empty()) {
        model.warnings.push_back(where + ": no valid view references, entity dropped");
        continue;
      }
      add_entity(entities, std::move(e));
    }
    for (const auto& item : doc.value("relationships", json::array())) {
      if (!item.is_object()) continue;
      Relationship r;
      if (item.contains("endpoints") && item["endpoints"].is_array() && item["endpoints"].size() == 2) {
        r.from = normalize_label(item["endpoints"][0].get<std::string>());
        r.to = normalize_label(item["endpoints"][1].get<std::string>());
      } else {
        r.from = normalize_label(item.value("from", ""));
        r.to = normalize_label(item.value("to", ""));
      }
      r.name = normalize_label(item.value("name", ""));
      if (r.name.empty()) r.name = r.from + "-" + r.to;
      r.views = known_views(item.value("views", json::array()), context + " relationship " + r.name);
      if (r.views.empty()) {
        model.warnings.push_back(context + " relationship " + r.name + ": no valid view references, dropped");
        continue;
      }
      relationships.push_back(std::move(r));
    }
  }
};

}  // namespace

ErModel extract_er(const std::vector<ViewCluster>& clusters, const Catalog& catalog,
                   const std::function<std::unique_ptr<ChatProvider>(std::string_view)>& conversation) {
  Builder b{catalog, {}};
  b.model.clusters = clusters;
  std::vector<Entity> entities;
  std::vector<Relationship> relationships;

  auto ask = [&](const std::string& name, const std::string& prompt) -> std::optional<json> {
    b.model.conversations.push_back(name);
    auto provider = conversation(name);
    ChatMessage system;
    system.role = Role::system;
    system.content = prompt;
    const std::vector<ChatMessage> history = {system};
    ChatMessage reply;
    try {
      reply = provider->chat(history, Role::analyst, {});
    } catch (const TranscriptExhausted&) {
      b.model.warnings.push_back(name + ": no reply recorded");
      return std::nullopt;
    }
    try {
      return parse_reply_json(reply.content);
    } catch (const json::exception& e) {
      b.model.warnings.push_back(name + ": reply is not a JSON object (" + e.what() + ")");
      return std::nullopt;
    }
  };

  for (std::size_t k = 0; k < clusters.size(); ++k) {
    for (const auto& m : clusters[k].members)
      if (!catalog.contains(m)) throw CatalogError("cluster member is not in the catalog: " + m);
    const auto name = "er_cluster_" + std::to_string(k + 1);
    if (const auto doc = ask(name, cluster_prompt(clusters[k], catalog))) {
      const auto before = entities.size();
      b.absorb_proposal(*doc, name, entities, relationships);
      if (entities.size() == before && doc->value("entities", json::array()).size() > 0) {
        b.model.warnings.push_back(name + ": proposal yielded no entities");
      }
    }
  }

  std::map<std::string, std::string, ILess> rename;
  if (entities.size() > 1) {
    if (const auto doc = ask("er_merge", merge_prompt(entities))) {
      for (const auto& group : doc->value("merge", json::array())) {
        if (!group.is_object()) continue;
        const auto target = normalize_label(group.value("name", ""));
        if (target.empty()) continue;
        for (const auto& src : group.value("entities", json::array())) {
          if (!src.is_string()) continue;
          const auto from = normalize_label(src.get<std::string>());
          if (std::none_of(entities.begin(), entities.end(), [&](const auto& e) { return iequals(e.name, from); })) {
            b.model.warnings.push_back("er_merge: unknown entity " + from);
            continue;
          }
          rename[from] = target;
        }
      }
    }
  }
  std::vector<Entity> merged;
  for (auto& e : entities) {
    if (const auto it = rename.find(e.name); it != rename.end()) e.name = it->second;
    b.add_entity(merged, std::move(e));
  }

  for (auto& e : merged) {
    for (const auto& v : e.views) {
      const auto t = lineage_tables(*catalog.find(v));
      e.origin_tables.insert(t.begin(), t.end());
    }
    std::sort(e.attributes.begin(), e.attributes.end(), [](const auto& x, const auto& y) { return icompare(x.name, y.name) < 0; });
  }
  std::sort(merged.begin(), merged.end(), [](const auto& x, const auto& y) { return icompare(x.name, y.name) < 0; });
  b.model.entities = std::move(merged);

  std::vector<Relationship> rels;
  for (auto& r : relationships) {
    if (const auto it = rename.find(r.from); it != rename.end()) r.from = it->second;
    if (const auto it = rename.find(r.to); it != rename.end()) r.to = it->second;
    const auto* from = b.model.find_entity(r.from);
    const auto* to = b.model.find_entity(r.to);
    if (!from || !to) {
      b.model.warnings.push_back("relationship " + r.name + ": endpoint is not an entity, dropped");
      continue;
    }
    r.from = from->name;
    r.to = to->name;
    auto it = std::find_if(rels.begin(), rels.end(), [&](const auto& x) { return iequals(x.name, r.name); });
    if (it != rels.end()) {
      it->views.insert(r.views.begin(), r.views.end());
      continue;
    }
    rels.push_back(std::move(r));
  }
  for (auto& r : rels) {
    for (const auto& v : r.views) {
      const auto t = lineage_tables(*catalog.find(v));
      r.origin_tables.insert(t.begin(), t.end());
    }
  }
  std::sort(rels.begin(), rels.end(), [](const auto& x, const auto& y) { return icompare(x.name, y.name) < 0; });
  b.model.relationships = std::move(rels);
  return std::move(b.model);
}

ErModel extract_er(const std::vector<ViewCluster>& clusters, const Catalog& catalog, Gateway& gateway) {
  return extract_er(clusters, catalog, [&](std::string_view name) { return gateway.conversation(name); });
}

namespace {

std::string md_cell(const std::vector<std::string>& items) {
  if (items.empty()) return "-";
  std::string out;
  for (const auto& i : items) {
    if (!out.empty()) out += "<br>";
    for (char c : i) {
      if (c == '|') out += "\\|";
      else out += c;
    }
  }
  return out;
}

std::string dot_id(std::string_view text) {
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

}  // namespace

std::string render_er(const ErModel& model, ErFormat format) {
  if (format == ErFormat::json) return canonical_json(model.to_json());
  std::ostringstream out;
  if (format == ErFormat::markdown) {
    out << "| Entity / Relation | Attributes | Views | Origin Tables |\n";
    out << "| --- | --- | --- | --- |\n";
    for (const auto& e : model.entities) {
      std::vector<std::string> attrs;
      for (const auto& a : e.attributes) attrs.push_back(a.name);
      out << "| **" << e.name << "** | " << md_cell(attrs) << " | " << md_cell(to_vector(e.views)) << " | "
          << md_cell(to_vector(e.origin_tables)) << " |\n";
    }
    for (const auto& r : model.relationships) {
      out << "| **" << r.name << "** | - | " << md_cell(to_vector(r.views)) << " | " << md_cell(to_vector(r.origin_tables))
          << " |\n";
    }
    return out.str();
  }
  out << "digraph er {\n  rankdir=LR;\n  node [shape=box];\n";
  for (const auto& e : model.entities) {
    std::string label = e.name;
    for (const auto& a : e.attributes) label += "\n" + a.name;
    out << "  " << dot_id(e.name) << " [label=" << dot_id(label) << "];\n";
  }
  for (const auto& r : model.relationships) {
    out << "  " << dot_id(r.from) << " -> " << dot_id(r.to) << " [label=" << dot_id(r.name) << ", dir=none];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace semlayer
