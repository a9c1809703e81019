#include "semlayer/schema_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "semlayer/errors.hpp"
#include "semlayer/sql/parser.hpp"

namespace semlayer {

const ColumnDef* TableDef::find(std::string_view column) const noexcept {
  for (const auto& c : columns)
    if (iequals(c.name, column)) return &c;
  return nullptr;
}

std::vector<std::string> TableDef::primary_key() const {
  std::vector<std::string> out;
  for (const auto& c : columns)
    if (c.primary_key) out.push_back(c.name);
  return out;
}

std::string_view to_string(FkProvenance p) noexcept {
  return p == FkProvenance::declared ? "declared" : "inferred";
}

std::string ForeignKeyDef::describe() const {
  return from.table + "." + from.column + " references " + to.table + "." + to.column;
}

SchemaSnapshot::SchemaSnapshot(std::vector<TableDef> tables, std::vector<ForeignKeyDef> foreign_keys,
                               SampleMap samples)
    : tables_(std::move(tables)), foreign_keys_(std::move(foreign_keys)), samples_(std::move(samples)) {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    const auto& t = tables_[i];
    if (t.name.empty()) throw SchemaError("table with empty name");
    if (t.columns.empty()) throw SchemaError("table " + t.name + " has no columns");
    if (!index_.emplace(t.name, i).second) throw SchemaError("duplicate table name: " + t.name);
    NameSet seen;
    for (const auto& c : t.columns) {
      if (c.name.empty()) throw SchemaError("empty column name in table " + t.name);
      if (!seen.insert(c.name).second) throw SchemaError("duplicate column " + t.name + "." + c.name);
    }
  }
  for (auto& fk : foreign_keys_) {
    auto from = canonical(fk.from);
    auto to = canonical(fk.to);
    if (!from) throw SchemaError("foreign key source does not exist: " + fk.from.qualified());
    if (!to) throw SchemaError("foreign key target does not exist: " + fk.to.qualified());
    if (*from == *to) throw SchemaError("foreign key references itself: " + fk.from.qualified());
    fk.from = *from;
    fk.to = *to;
  }
  for (const auto& [table, rows] : samples_) {
    const TableDef* t = find_table(table);
    if (!t) throw SchemaError("samples reference unknown table " + table);
    for (const auto& row : rows)
      if (row.size() != t->width()) throw SchemaError("sample row width mismatch for " + table);
  }
}

const TableDef* SchemaSnapshot::find_table(std::string_view name) const noexcept {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &tables_[it->second];
}

bool SchemaSnapshot::has_column(const ColumnRef& ref) const noexcept {
  const TableDef* t = find_table(ref.table);
  return t && t->find(ref.column);
}

std::optional<ColumnRef> SchemaSnapshot::canonical(const ColumnRef& ref) const {
  const TableDef* t = find_table(ref.table);
  if (!t) return std::nullopt;
  const ColumnDef* c = t->find(ref.column);
  if (!c) return std::nullopt;
  return ColumnRef{t->name, c->name};
}

std::size_t SchemaSnapshot::column_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tables_) n += t.width();
  return n;
}

std::vector<ColumnRef> SchemaSnapshot::all_columns() const {
  std::vector<ColumnRef> out;
  out.reserve(column_count());
  for (const auto& t : tables_)
    for (const auto& c : t.columns) out.push_back({t.name, c.name});
  return out;
}

SchemaSnapshot SchemaSnapshot::with_foreign_keys(std::vector<ForeignKeyDef> extra) const {
  auto fks = foreign_keys_;
  std::size_t next_group = 0;
  for (const auto& fk : fks) next_group = std::max(next_group, fk.group + 1);
  for (auto& fk : extra) {
    fk.group = next_group++;
    fks.push_back(std::move(fk));
  }
  return SchemaSnapshot(tables_, std::move(fks), samples_);
}

SchemaSnapshot SchemaSnapshot::with_samples(SampleMap samples) const {
  return SchemaSnapshot(tables_, foreign_keys_, std::move(samples));
}

namespace {

json column_ref_json(const ColumnRef& r) { return json{{"table", r.table}, {"column", r.column}}; }

json row_json(const Row& row) {
  json out = json::array();
  for (const auto& v : row) out.push_back(v ? json(*v) : json(nullptr));
  return out;
}

}  // namespace

json SchemaSnapshot::to_json() const {
  json tables = json::array();
  for (const auto& t : tables_) {
    json cols = json::array();
    for (const auto& c : t.columns) {
      cols.push_back({{"name", c.name}, {"type", c.type}, {"description", c.description}, {"primary_key", c.primary_key}});
    }
    tables.push_back({{"name", t.name}, {"columns", std::move(cols)}});
  }
  json fks = json::array();
  for (const auto& fk : foreign_keys_) {
    fks.push_back({{"from", column_ref_json(fk.from)},
                   {"to", column_ref_json(fk.to)},
                   {"provenance", std::string(to_string(fk.provenance))},
                   {"group", fk.group}});
  }
  json samples = json::object();
  for (const auto& [table, rows] : samples_) {
    json rs = json::array();
    for (const auto& row : rows) rs.push_back(row_json(row));
    samples[table] = std::move(rs);
  }
  return {{"version", kSnapshotVersion}, {"tables", std::move(tables)}, {"foreign_keys", std::move(fks)},
          {"samples", std::move(samples)}};
}

SchemaSnapshot SchemaSnapshot::from_json(const json& doc) {
  if (doc.value("version", "") != kSnapshotVersion) throw SchemaError("expected schema_snapshot.v1 document");
  try {
    std::vector<TableDef> tables;
    for (const auto& jt : doc.at("tables")) {
      TableDef t;
      t.name = jt.at("name").get<std::string>();
      for (const auto& jc : jt.at("columns")) {
        t.columns.push_back({jc.at("name").get<std::string>(), jc.value("type", ""), jc.value("description", ""),
                             jc.value("primary_key", false)});
      }
      tables.push_back(std::move(t));
    }
    std::vector<ForeignKeyDef> fks;
    for (const auto& jf : doc.at("foreign_keys")) {
      ForeignKeyDef fk;
      fk.from = {jf.at("from").at("table").get<std::string>(), jf.at("from").at("column").get<std::string>()};
      fk.to = {jf.at("to").at("table").get<std::string>(), jf.at("to").at("column").get<std::string>()};
      fk.provenance = jf.value("provenance", "declared") == "inferred" ? FkProvenance::inferred : FkProvenance::declared;
      fk.group = jf.value("group", std::size_t{0});
      fks.push_back(std::move(fk));
    }
    SampleMap samples;
    if (doc.contains("samples")) {
      for (const auto& [table, rows] : doc["samples"].items()) {
        auto& out = samples[table];
        for (const auto& jr : rows) {
          Row row;
          for (const auto& v : jr) row.push_back(v.is_null() ? Value{} : Value{v.get<std::string>()});
          out.push_back(std::move(row));
        }
      }
    }
    return SchemaSnapshot(std::move(tables), std::move(fks), std::move(samples));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema snapshot: ") + e.what());
  }
}

namespace {

struct PendingFk {
  std::string from_table;
  std::vector<std::string> from_columns;
  std::string to_table;
  std::vector<std::string> to_columns;  // empty = target primary key
};

/// Resolves FK groups against the tables and numbers them canonically: by
/// source table position, then first source column position, then target name.
std::vector<ForeignKeyDef> resolve_foreign_keys(const std::vector<TableDef>& tables, std::vector<PendingFk> pending) {
  auto table_index = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < tables.size(); ++i)
      if (iequals(tables[i].name, name)) return i;
    return std::nullopt;
  };
  auto column_index = [](const TableDef& t, std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      if (iequals(t.columns[i].name, name)) return i;
    return std::nullopt;
  };

  struct Resolved {
    std::size_t from_table, first_col;
    std::string to_name;
    std::vector<ForeignKeyDef> parts;
  };
  std::vector<Resolved> groups;
  for (auto& p : pending) {
    auto ft = table_index(p.from_table);
    auto tt = table_index(p.to_table);
    if (!ft) throw SchemaError("foreign key on unknown table " + p.from_table);
    if (!tt) throw SchemaError("foreign key references unknown table " + p.to_table);
    const TableDef& from = tables[*ft];
    const TableDef& to = tables[*tt];
    if (p.to_columns.empty()) p.to_columns = to.primary_key();
    if (p.to_columns.size() != p.from_columns.size()) {
      throw SchemaError("foreign key column count mismatch: " + from.name + " -> " + to.name);
    }
    Resolved r{*ft, SIZE_MAX, to.name, {}};
    for (std::size_t i = 0; i < p.from_columns.size(); ++i) {
      auto fc = column_index(from, p.from_columns[i]);
      auto tc = column_index(to, p.to_columns[i]);
      if (!fc) throw SchemaError("foreign key column does not exist: " + from.name + "." + p.from_columns[i]);
      if (!tc) throw SchemaError("foreign key target does not exist: " + to.name + "." + p.to_columns[i]);
      r.first_col = std::min(r.first_col, *fc);
      r.parts.push_back({{from.name, from.columns[*fc].name}, {to.name, to.columns[*tc].name}, FkProvenance::declared, 0});
    }
    groups.push_back(std::move(r));
  }
  std::stable_sort(groups.begin(), groups.end(), [](const Resolved& a, const Resolved& b) {
    if (a.from_table != b.from_table) return a.from_table < b.from_table;
    if (a.first_col != b.first_col) return a.first_col < b.first_col;
    return icompare(a.to_name, b.to_name) == std::strong_ordering::less;
  });
  std::vector<ForeignKeyDef> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (auto& part : groups[g].parts) {
      part.group = g;
      out.push_back(std::move(part));
    }
  }
  return out;
}

TableDef table_from_ast(const sql::CreateTable& ast, std::vector<PendingFk>& fks) {
  TableDef t;
  t.name = ast.name;
  for (const auto& c : ast.columns) {
    t.columns.push_back({c.name, c.type_text, c.description, c.primary_key});
    if (c.references) fks.push_back({ast.name, {c.name}, c.references->first, c.references->second});
  }
  for (const auto& pk : ast.primary_key) {
    bool found = false;
    for (auto& c : t.columns) {
      if (iequals(c.name, pk)) {
        c.primary_key = true;
        found = true;
      }
    }
    if (!found) throw SchemaError("primary key column does not exist: " + ast.name + "." + pk);
  }
  for (const auto& fk : ast.foreign_keys) fks.push_back({ast.name, fk.columns, fk.table, fk.ref_columns});
  return t;
}

}  // namespace

SchemaSnapshot ingest_ddl(std::string_view ddl_text) {
  const auto statements = sql::split_statements(ddl_text);
  std::vector<TableDef> tables;
  std::vector<PendingFk> pending;
  NameSet names;
  for (std::size_t i = 0; i < statements.size(); ++i) {
    const auto& st = statements[i];
    if (sql::classify_statement(st.text) != sql::StatementKind::create_table) {
      auto lexed = sql::tokenize(st.text, i);
      const auto& tok = lexed.tokens.front();
      throw ParseError("statement " + std::to_string(i) + " is not CREATE TABLE (near \"" + tok.text + "\")", i,
                       st.offset + tok.span.begin, tok.text);
    }
    sql::CreateTable ast;
    try {
      ast = sql::parse_create_table(st.text, i);
    } catch (const ParseError& e) {
      throw ParseError("statement " + std::to_string(i) + ": " + e.what(), i, st.offset + e.offset(), e.token());
    }
    if (!names.insert(ast.name).second) throw SchemaError("duplicate table name: " + ast.name);
    tables.push_back(table_from_ast(ast, pending));
  }
  auto fks = resolve_foreign_keys(tables, std::move(pending));
  return SchemaSnapshot(std::move(tables), std::move(fks));
}

namespace {

std::string one_line(std::string_view text) {
  std::string out;
  for (char c : text) out += (c == '\n' || c == '\r') ? ' ' : c;
  return out;
}

}  // namespace

std::string render_ddl(const SchemaSnapshot& snapshot) {
  std::ostringstream out;
  for (const auto& t : snapshot.tables()) {
    std::vector<std::string> lines;
    std::vector<std::string> notes;
    for (const auto& c : t.columns) {
      std::string line = "  " + quote_identifier(c.name);
      if (!c.type.empty()) line += " " + c.type;
      lines.push_back(std::move(line));
      notes.push_back(c.description);
    }
    const auto pk = t.primary_key();
    if (!pk.empty()) {
      std::string line = "  PRIMARY KEY (";
      for (std::size_t i = 0; i < pk.size(); ++i) line += (i ? ", " : "") + quote_identifier(pk[i]);
      lines.push_back(line + ")");
      notes.emplace_back();
    }
    // group parts of composite keys
    std::map<std::size_t, std::vector<const ForeignKeyDef*>> groups;
    for (const auto& fk : snapshot.foreign_keys())
      if (iequals(fk.from.table, t.name)) groups[fk.group].push_back(&fk);
    for (const auto& [g, parts] : groups) {
      std::string from, to;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        from += (i ? ", " : "") + quote_identifier(parts[i]->from.column);
        to += (i ? ", " : "") + quote_identifier(parts[i]->to.column);
      }
      lines.push_back("  FOREIGN KEY (" + from + ") REFERENCES " + quote_identifier(parts.front()->to.table) + " (" +
                      to + ")");
      notes.emplace_back();
    }
    out << "CREATE TABLE " << quote_identifier(t.name) << " (\n";
    for (std::size_t i = 0; i < lines.size(); ++i) {
      out << lines[i];
      if (i + 1 < lines.size()) out << ",";
      if (!notes[i].empty()) out << " -- " << one_line(notes[i]);
      out << "\n";
    }
    out << ");\n";
  }
  return out.str();
}

void materialize(const SchemaSnapshot& snapshot, Database& db) {
  db.exec(render_ddl(snapshot));
  for (const auto& [table, rows] : snapshot.samples()) db.insert_rows(table, rows);
}

SchemaSnapshot introspect_database(Database& db) {
  const auto objects = db.query(
      "SELECT name, sql FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' "
      "ORDER BY rowid");
  std::vector<TableDef> tables;
  std::vector<PendingFk> pending;
  for (const auto& obj : objects.rows) {
    TableDef t;
    t.name = *obj[0];
    std::map<std::string, std::string, ILess> descriptions;
    if (obj[1]) {
      try {
        for (const auto& c : sql::parse_create_table(*obj[1]).columns) descriptions[c.name] = c.description;
      } catch (const ParseError&) {
        // tables created with syntax outside the supported subset keep empty descriptions
      }
    }
    const auto info = db.query("PRAGMA table_info(" + quote_identifier(t.name) + ")");
    for (const auto& row : info.rows) {
      ColumnDef c;
      c.name = row[1].value_or("");
      c.type = row[2].value_or("");
      c.primary_key = row[5].value_or("0") != "0";
      if (auto it = descriptions.find(c.name); it != descriptions.end()) c.description = it->second;
      t.columns.push_back(std::move(c));
    }
    const auto fk_rows = db.query("PRAGMA foreign_key_list(" + quote_identifier(t.name) + ")");
    std::map<long, PendingFk> by_id;
    for (const auto& row : fk_rows.rows) {
      auto& p = by_id[std::stol(row[0].value_or("0"))];
      p.from_table = t.name;
      p.to_table = row[2].value_or("");
      p.from_columns.push_back(row[3].value_or(""));
      if (row[4]) p.to_columns.push_back(*row[4]);
    }
    for (auto& [id, p] : by_id) pending.push_back(std::move(p));
    tables.push_back(std::move(t));
  }
  auto fks = resolve_foreign_keys(tables, std::move(pending));
  return SchemaSnapshot(std::move(tables), std::move(fks));
}

namespace {

bool name_matches_table(std::string_view stem, std::string_view table) {
  if (iequals(stem, table)) return true;
  const std::string s = fold(stem), t = fold(table);
  if (t == s + "s" || t == s + "es" || s == t + "s" || s == t + "es") return true;
  if (s.size() > 1 && s.back() == 'y' && t == s.substr(0, s.size() - 1) + "ies") return true;
  return false;
}

}  // namespace

std::vector<ForeignKeyDef> infer_foreign_keys(const SchemaSnapshot& snapshot, const FkInferenceConfig& config) {
  std::set<std::pair<ColumnRef, ColumnRef>> existing;
  for (const auto& fk : snapshot.foreign_keys()) existing.insert({fk.from, fk.to});
  std::set<std::pair<ColumnRef, ColumnRef>> emitted;
  std::vector<ForeignKeyDef> out;
  auto emit = [&](ColumnRef from, ColumnRef to) {
    if (from == to || iequals(from.table, to.table)) return;
    if (existing.count({from, to}) || !emitted.insert({from, to}).second) return;
    out.push_back({std::move(from), std::move(to), FkProvenance::inferred, 0});
  };

  for (const auto& target : snapshot.tables()) {
    const auto pk = target.primary_key();
    if (pk.size() != 1) continue;
    const ColumnRef key{target.name, pk.front()};
    for (const auto& source : snapshot.tables()) {
      if (&source == &target) continue;
      for (const auto& col : source.columns) {
        if (config.match_primary_key && iequals(col.name, key.column) && !col.primary_key) {
          emit({source.name, col.name}, key);
          continue;
        }
        if (config.match_table_id && col.name.size() > 3 && iequals(col.name.substr(col.name.size() - 3), "_id") &&
            name_matches_table(std::string_view(col.name).substr(0, col.name.size() - 3), target.name)) {
          emit({source.name, col.name}, key);
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const ForeignKeyDef& a, const ForeignKeyDef& b) {
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  });
  return out;
}

std::vector<Row> sample_rows(Database& db, std::string_view table, std::size_t n) {
  if (!db.object_exists(table, "table")) throw DatabaseError("no such table: " + std::string(table));
  const auto info = db.query("PRAGMA table_info(" + quote_identifier(table) + ")");
  std::vector<std::pair<int, std::string>> pk;
  std::vector<std::string> all;
  for (const auto& row : info.rows) {
    all.push_back(row[1].value_or(""));
    const int pos = std::stoi(row[5].value_or("0"));
    if (pos > 0) pk.emplace_back(pos, row[1].value_or(""));
  }
  std::sort(pk.begin(), pk.end());
  std::string order;
  if (!pk.empty()) {
    for (const auto& [pos, name] : pk) order += (order.empty() ? "" : ", ") + quote_identifier(name);
  } else {
    for (const auto& name : all) order += (order.empty() ? "" : ", ") + quote_identifier(name);
  }
  return db.query("SELECT * FROM " + quote_identifier(table) + " ORDER BY " + order + " LIMIT " + std::to_string(n))
      .rows;
}

SchemaSnapshot attach_samples(const SchemaSnapshot& snapshot, Database& db, std::size_t n) {
  SampleMap samples;
  for (const auto& t : snapshot.tables()) samples[t.name] = sample_rows(db, t.name, n);
  return snapshot.with_samples(std::move(samples));
}

std::string schema_wording(const SchemaSnapshot& snapshot, const NameSet& scope, bool include_samples) {
  for (const auto& name : scope)
    if (!snapshot.find_table(name)) throw SchemaError("scope names unknown table " + name);
  if (scope.empty()) return std::string(kEmptyScopeWording);

  std::ostringstream out;
  out << "Database schema: " << scope.size() << (scope.size() == 1 ? " table" : " tables") << ".\n";
  for (const auto& t : snapshot.tables()) {
    if (!scope.count(t.name)) continue;
    out << "\nTable " << t.name << " (" << t.width() << (t.width() == 1 ? " column" : " columns") << "):\n";
    for (const auto& c : t.columns) {
      out << "  - " << c.name;
      if (!c.type.empty()) out << " " << c.type;
      if (c.primary_key) out << " [primary key]";
      if (!c.description.empty()) out << ": " << one_line(c.description);
      out << "\n";
    }
  }
  std::vector<std::string> links;
  for (const auto& fk : snapshot.foreign_keys())
    if (scope.count(fk.from.table) && scope.count(fk.to.table)) links.push_back(fk.describe());
  if (!links.empty()) {
    out << "\nForeign keys:\n";
    for (const auto& l : links) out << "  - " << l << "\n";
  }
  if (include_samples) {
    for (const auto& t : snapshot.tables()) {
      if (!scope.count(t.name)) continue;
      auto it = snapshot.samples().find(t.name);
      if (it == snapshot.samples().end() || it->second.empty()) continue;
      out << "\nSample rows from " << t.name << ":\n```text\n";
      for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? " | " : "") << t.columns[i].name;
      out << "\n";
      for (const auto& row : it->second) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " | " : "") << one_line(row[i].value_or("NULL"));
        out << "\n";
      }
      out << "```\n";
    }
  }
  return out.str();
}

}  // namespace semlayer
