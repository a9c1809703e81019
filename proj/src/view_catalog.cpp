#include "semlayer/view_catalog.hpp"

#include <functional>

#include "semlayer/errors.hpp"
#include "semlayer/sql/parser.hpp"

namespace semlayer {

ColumnSet Lineage::output_origins() const {
  ColumnSet out;
  for (const auto& c : columns) out.insert(c.origins.begin(), c.origins.end());
  return out;
}

ColumnSet Lineage::coverage() const {
  ColumnSet out = output_origins();
  out.insert(predicate_columns.begin(), predicate_columns.end());
  return out;
}

namespace {

void collect_refs(const sql::Select& s, NameSet& tables, NameSet& ctes);

void collect_refs(const sql::Expr& e, NameSet& tables, NameSet& ctes) {
  if (e.kind == sql::ExprKind::in_table) tables.insert(e.name);
  if (e.subquery) collect_refs(*e.subquery, tables, ctes);
  for (const auto& a : e.args) collect_refs(*a, tables, ctes);
  if (e.filter) collect_refs(*e.filter, tables, ctes);
  if (e.over) {
    for (const auto& p : e.over->partition) collect_refs(*p, tables, ctes);
    for (const auto& o : e.over->order) collect_refs(*o.expr, tables, ctes);
  }
}

void collect_refs(const std::vector<sql::JoinItem>& items, NameSet& tables, NameSet& ctes) {
  for (const auto& item : items) {
    const auto& ref = item.ref;
    if (ref.kind == sql::TableRef::Kind::table) tables.insert(ref.name);
    if (ref.subquery) collect_refs(*ref.subquery, tables, ctes);
    collect_refs(ref.group, tables, ctes);
    for (const auto& a : ref.function_args) collect_refs(*a, tables, ctes);
    if (item.on) collect_refs(*item.on, tables, ctes);
  }
}

void collect_refs(const sql::Select& s, NameSet& tables, NameSet& ctes) {
  for (const auto& cte : s.ctes) {
    ctes.insert(cte.name);
    collect_refs(*cte.select, tables, ctes);
  }
  for (const auto& core : s.cores) {
    for (const auto& rc : core.columns)
      if (rc.expr) collect_refs(*rc.expr, tables, ctes);
    for (const auto& row : core.values)
      for (const auto& v : row) collect_refs(*v, tables, ctes);
    collect_refs(core.from, tables, ctes);
    if (core.where) collect_refs(*core.where, tables, ctes);
    for (const auto& g : core.group_by) collect_refs(*g, tables, ctes);
    if (core.having) collect_refs(*core.having, tables, ctes);
  }
  for (const auto& o : s.order_by) collect_refs(*o.expr, tables, ctes);
}

std::string strip_statement(std::string_view sql) {
  auto statements = sql::split_statements(sql);
  if (statements.empty()) throw ParseError("empty view definition", 0, 0, "");
  if (statements.size() > 1) {
    throw ParseError("expected a single CREATE VIEW statement, found " + std::to_string(statements.size()), 1,
                     statements[1].offset, "");
  }
  return std::move(statements.front().text);
}

}  // namespace

ViewDefinition parse_view(std::string_view sql) {
  ViewDefinition def;
  def.sql = strip_statement(sql);
  if (sql::classify_statement(def.sql) != sql::StatementKind::create_view) {
    throw ParseError("not a CREATE VIEW statement", 0, 0, def.sql.substr(0, def.sql.find(' ')));
  }
  const auto ast = sql::parse_create_view(def.sql);
  def.name = ast.name;
  if (!ast.columns.empty()) {
    def.output_columns = ast.columns;
  } else {
    const auto& first = ast.select->cores.front();
    if (first.is_values) {
      for (std::size_t i = 0; i < first.values.front().size(); ++i) def.output_columns.push_back("column" + std::to_string(i + 1));
    }
    for (const auto& rc : first.columns) {
      switch (rc.kind) {
        case sql::ResultColumn::Kind::star:
          def.output_columns.emplace_back("*");
          break;
        case sql::ResultColumn::Kind::table_star:
          def.output_columns.push_back(rc.table + ".*");
          break;
        case sql::ResultColumn::Kind::expr:
          if (!rc.alias.empty()) def.output_columns.push_back(rc.alias);
          else if (rc.expr->kind == sql::ExprKind::column) def.output_columns.push_back(rc.expr->name);
          else def.output_columns.push_back(def.sql.substr(rc.span.begin, rc.span.end - rc.span.begin));
          break;
      }
    }
  }
  NameSet tables, ctes;
  collect_refs(*ast.select, tables, ctes);
  for (const auto& t : tables)
    if (!ctes.count(t)) def.referenced_objects.insert(t);
  return def;
}

namespace {

/// Index of the view-name token (schema-qualified names: the last part).
std::optional<std::size_t> view_name_token(const std::vector<sql::Token>& toks) {
  std::size_t i = 0;
  if (!toks[i].is_keyword("CREATE")) return std::nullopt;
  ++i;
  if (toks[i].is_keyword("TEMP") || toks[i].is_keyword("TEMPORARY")) ++i;
  if (!toks[i].is_keyword("VIEW")) return std::nullopt;
  ++i;
  if (toks[i].is_keyword("IF") && toks[i + 1].is_keyword("NOT") && toks[i + 2].is_keyword("EXISTS")) i += 3;
  if (!toks[i].is_word() && toks[i].kind != sql::TokenKind::string) return std::nullopt;
  if (toks[i + 1].is_punct(".") && toks[i + 2].is_word()) i += 2;
  return i;
}

}  // namespace

std::optional<std::string> view_name_of(std::string_view sql) {
  try {
    const auto lexed = sql::tokenize(sql);
    auto idx = view_name_token(lexed.tokens);
    if (!idx) return std::nullopt;
    return lexed.tokens[*idx].value;
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

std::string rename_view(std::string_view sql, std::string_view new_name) {
  const auto lexed = sql::tokenize(sql);
  auto idx = view_name_token(lexed.tokens);
  if (!idx) throw ParseError("not a CREATE VIEW statement", 0, 0, "");
  const auto span = lexed.tokens[*idx].span;
  std::string out(sql.substr(0, span.begin));
  out += new_name;
  out += sql.substr(span.end);
  return out;
}

ValidationRecord validate_view(Database& db, std::string_view sql) {
  ValidationRecord rec;
  const auto name = view_name_of(sql);
  if (!name) {
    rec.failed_stage = ValidationRecord::Stage::create;
    rec.error = "not a CREATE VIEW statement";
    return rec;
  }
  Savepoint sp(db, "validate_view");
  try {
    db.exec(sql);
  } catch (const DatabaseError& e) {
    rec.failed_stage = ValidationRecord::Stage::create;
    rec.error = e.what();
    sp.rollback();
    return rec;
  }
  try {
    rec.probe_rows = db.query("SELECT * FROM " + quote_identifier(*name) + " LIMIT 1").rows.size();
  } catch (const DatabaseError& e) {
    rec.failed_stage = ValidationRecord::Stage::probe;
    rec.error = e.what();
    sp.rollback();
    return rec;
  }
  sp.release();
  rec.passed = true;
  return rec;
}

// ---- Catalog ----------------------------------------------------------------

namespace {

/// True when following catalog references from `start` leads back to `start`.
bool reaches_cycle(const Catalog::EntryMap& entries, const std::string& start) {
  NameSet done;
  NameSet on_path;
  std::function<bool(const std::string&)> visit = [&](const std::string& name) -> bool {
    if (on_path.count(name)) return true;
    if (done.count(name)) return false;
    auto it = entries.find(name);
    if (it == entries.end()) return false;
    on_path.insert(name);
    for (const auto& ref : it->second.view.referenced_objects)
      if (visit(ref)) return true;
    on_path.erase(name);
    done.insert(name);
    return false;
  };
  return visit(start);
}

json columns_json(const ColumnSet& cols) {
  json out = json::array();
  for (const auto& c : cols) out.push_back({{"table", c.table}, {"column", c.column}});
  return out;
}

ColumnSet columns_from_json(const json& arr) {
  ColumnSet out;
  for (const auto& c : arr) out.insert({c.at("table").get<std::string>(), c.at("column").get<std::string>()});
  return out;
}

}  // namespace

void Catalog::register_entry(CatalogEntry entry) {
  const std::string name = entry.view.name;
  if (name.empty()) throw CatalogError("view with empty name");
  if (!entry.validation.passed) throw CatalogError("view " + name + " has not passed validation");
  if (entries_.count(name)) throw CatalogError("view name already registered: " + name);
  if (entry.view.referenced_objects.count(name)) throw CatalogError("cyclic reference: " + name + " references itself");
  auto [it, inserted] = entries_.emplace(name, std::move(entry));
  if (reaches_cycle(entries_, name)) {
    entries_.erase(it);
    throw CatalogError("registering " + name + " would introduce a reference cycle");
  }
}

const CatalogEntry* Catalog::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string Catalog::fresh_name(std::string_view base, const NameSet& also_taken) const {
  auto taken = [&](std::string_view n) { return contains(n) || also_taken.count(n); };
  if (!taken(base)) return std::string(base);
  for (std::size_t k = 2;; ++k) {
    std::string candidate = std::string(base) + "_" + std::to_string(k);
    if (!taken(candidate)) return candidate;
  }
}

json Catalog::to_json() const {
  json views = json::array();
  for (const auto& [name, e] : entries_) {
    json lineage_cols = json::array();
    for (const auto& c : e.lineage.columns) lineage_cols.push_back({{"name", c.name}, {"origins", columns_json(c.origins)}});
    json refs = json::array();
    for (const auto& r : e.view.referenced_objects) refs.push_back(r);
    views.push_back({
        {"name", e.view.name},
        {"sql", e.view.sql},
        {"output_columns", e.view.output_columns},
        {"referenced_objects", std::move(refs)},
        {"lineage", {{"columns", std::move(lineage_cols)}, {"predicate_columns", columns_json(e.lineage.predicate_columns)}}},
        {"session_id", e.session_id},
        {"validation", {{"passed", e.validation.passed}, {"probe_rows", e.validation.probe_rows}, {"sequence", e.validation.sequence}}},
    });
  }
  return {{"version", kCatalogVersion}, {"snapshot_digest", snapshot_digest_}, {"views", std::move(views)}};
}

Catalog Catalog::from_json(const json& doc) {
  if (!doc.is_object() || doc.value("version", "") != kCatalogVersion) {
    throw CatalogError("catalog version mismatch: expected catalog.v1");
  }
  Catalog cat(doc.value("snapshot_digest", ""));
  try {
    for (const auto& jv : doc.at("views")) {
      CatalogEntry e;
      e.view.name = jv.at("name").get<std::string>();
      e.view.sql = jv.at("sql").get<std::string>();
      e.view.output_columns = jv.at("output_columns").get<std::vector<std::string>>();
      for (const auto& r : jv.at("referenced_objects")) e.view.referenced_objects.insert(r.get<std::string>());
      for (const auto& c : jv.at("lineage").at("columns")) {
        e.lineage.columns.push_back({c.at("name").get<std::string>(), columns_from_json(c.at("origins"))});
      }
      e.lineage.predicate_columns = columns_from_json(jv.at("lineage").at("predicate_columns"));
      e.session_id = jv.at("session_id").get<std::size_t>();
      const auto& jval = jv.at("validation");
      e.validation.passed = jval.at("passed").get<bool>();
      e.validation.probe_rows = jval.at("probe_rows").get<std::size_t>();
      e.validation.sequence = jval.value("sequence", std::size_t{0});
      if (cat.entries_.count(e.view.name)) throw CatalogError("duplicate view in catalog: " + e.view.name);
      if (!e.validation.passed) throw CatalogError("catalog entry without passed validation: " + e.view.name);
      cat.entries_.emplace(e.view.name, std::move(e));
    }
  } catch (const json::exception& ex) {
    throw CatalogError(std::string("malformed catalog: ") + ex.what());
  }
  for (const auto& [name, e] : cat.entries_) {
    if (reaches_cycle(cat.entries_, name)) throw CatalogError("catalog contains a reference cycle through " + name);
  }
  return cat;
}

void Catalog::save(const std::filesystem::path& path) const { write_file_atomic(path, canonical_json(to_json())); }

Catalog Catalog::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw CatalogError(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

std::string snapshot_digest(const SchemaSnapshot& snapshot) {
  json doc = snapshot.to_json();
  doc.erase("samples");
  return sha256_hex(canonical_json(doc));
}

}  // namespace semlayer
