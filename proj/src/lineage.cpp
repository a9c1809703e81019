#include <algorithm>
#include <map>
#include <memory>

#include "semlayer/errors.hpp"
#include "semlayer/sql/parser.hpp"
#include "semlayer/view_catalog.hpp"

namespace semlayer {

namespace {

using sql::Expr;
using sql::ExprKind;

struct RelColumn {
  std::string name;
  ColumnSet origins;
};

/// A derived relation: ordered output columns plus the predicate columns used
/// to compute it, which propagate to whoever reads from it.
struct Relation {
  std::vector<RelColumn> columns;
  ColumnSet predicates;
};

struct Source {
  std::string alias;  // qualifier used to address this source
  std::shared_ptr<const Relation> rel;
  NameSet merged;  // USING/NATURAL columns hidden from unqualified lookup and `*`
};

struct Scope {
  std::vector<Source> sources;
  const Scope* outer = nullptr;
  // Result-column aliases of the current core; usable in WHERE/GROUP BY/HAVING.
  const std::vector<std::pair<std::string, ColumnSet>>* aliases = nullptr;
};

using CteFrame = std::map<std::string, std::shared_ptr<const Relation>, ILess>;

bool is_rowid_alias(std::string_view name) {
  return iequals(name, "rowid") || iequals(name, "oid") || iequals(name, "_rowid_");
}

/// SQLite renames duplicate result names of a view as "name:1", "name:2", ...
void dedupe_names(std::vector<RelColumn>& cols) {
  NameSet used;
  for (auto& c : cols) {
    if (used.insert(c.name).second) continue;
    for (int k = 1;; ++k) {
      std::string candidate = c.name + ":" + std::to_string(k);
      if (used.insert(candidate).second) {
        c.name = std::move(candidate);
        break;
      }
    }
  }
}

class Resolver {
 public:
  Resolver(std::string_view sql, const SchemaSnapshot& snapshot, const Catalog& catalog)
      : sql_(sql), snapshot_(snapshot), catalog_(catalog) {}

  Relation select(const sql::Select& s, const Scope* outer) {
    if (s.recursive) throw LineageError("recursive CTEs are not supported");
    ctes_.emplace_back();
    for (const auto& cte : s.ctes) {
      Relation rel = select(*cte.select, outer);
      if (!cte.columns.empty()) {
        if (cte.columns.size() != rel.columns.size()) {
          throw LineageError("CTE " + cte.name + " declares " + std::to_string(cte.columns.size()) +
                             " columns but its query returns " + std::to_string(rel.columns.size()));
        }
        for (std::size_t i = 0; i < cte.columns.size(); ++i) rel.columns[i].name = cte.columns[i];
      }
      ctes_.back()[cte.name] = std::make_shared<const Relation>(std::move(rel));
    }
    Relation out;
    for (std::size_t i = 0; i < s.cores.size(); ++i) {
      Relation core = this->core(s.cores[i], outer);
      if (i == 0) {
        out = std::move(core);
        continue;
      }
      if (core.columns.size() != out.columns.size()) {
        throw LineageError("compound SELECT arms have different column counts");
      }
      for (std::size_t c = 0; c < core.columns.size(); ++c) {
        out.columns[c].origins.insert(core.columns[c].origins.begin(), core.columns[c].origins.end());
      }
      out.predicates.insert(core.predicates.begin(), core.predicates.end());
    }
    ctes_.pop_back();
    return out;
  }

 private:
  std::string span_text(sql::Span span) const {
    return std::string(sql_.substr(span.begin, span.end - span.begin));
  }

  // ---- FROM -----------------------------------------------------------------

  std::shared_ptr<const Relation> named_relation(const std::string& name) {
    for (auto it = ctes_.rbegin(); it != ctes_.rend(); ++it) {
      if (auto f = it->find(name); f != it->end()) return f->second;
    }
    if (const CatalogEntry* entry = catalog_.find(name)) {
      auto rel = std::make_shared<Relation>();
      for (const auto& col : entry->lineage.columns) rel->columns.push_back({col.name, col.origins});
      rel->predicates = entry->lineage.predicate_columns;
      return rel;
    }
    if (const TableDef* table = snapshot_.find_table(name)) {
      auto rel = std::make_shared<Relation>();
      for (const auto& c : table->columns) rel->columns.push_back({c.name, {ColumnRef{table->name, c.name}}});
      return rel;
    }
    throw LineageError("no such table or view: " + name);
  }

  std::shared_ptr<const Relation> table_function(const sql::TableRef& ref, Scope& scope, Relation& into) {
    if (!iequals(ref.name, "json_each") && !iequals(ref.name, "json_tree")) {
      throw LineageError("unsupported table-valued function: " + ref.name);
    }
    ColumnSet args;
    for (const auto& a : ref.function_args) value(*a, scope, into, args);
    auto rel = std::make_shared<Relation>();
    for (const char* c : {"key", "value", "type", "atom", "id", "parent", "fullkey", "path", "json", "root"}) {
      rel->columns.push_back({c, args});
    }
    return rel;
  }

  void add_source(const sql::TableRef& ref, Scope& scope, Relation& into) {
    switch (ref.kind) {
      case sql::TableRef::Kind::table: {
        auto rel = named_relation(ref.name);
        into.predicates.insert(rel->predicates.begin(), rel->predicates.end());
        scope.sources.push_back({ref.alias.empty() ? ref.name : ref.alias, std::move(rel), {}});
        return;
      }
      case sql::TableRef::Kind::subquery: {
        auto rel = std::make_shared<const Relation>(select(*ref.subquery, scope.outer));
        into.predicates.insert(rel->predicates.begin(), rel->predicates.end());
        scope.sources.push_back({ref.alias, std::move(rel), {}});
        return;
      }
      case sql::TableRef::Kind::table_function: {
        auto rel = table_function(ref, scope, into);
        scope.sources.push_back({ref.alias.empty() ? ref.name : ref.alias, std::move(rel), {}});
        return;
      }
      case sql::TableRef::Kind::join_group:
        join_list(ref.group, scope, into);
        return;
    }
  }

  const RelColumn* visible_column(const Source& s, std::string_view name) const {
    if (s.merged.count(name)) return nullptr;
    for (const auto& c : s.rel->columns)
      if (iequals(c.name, name)) return &c;
    return nullptr;
  }

  void join_list(const std::vector<sql::JoinItem>& items, Scope& scope, Relation& into) {
    for (const auto& item : items) {
      const std::size_t left_count = scope.sources.size();
      add_source(item.ref, scope, into);
      const std::size_t right_begin = left_count;
      std::vector<std::string> merge_cols = item.using_columns;
      if (item.natural) {
        for (std::size_t r = right_begin; r < scope.sources.size(); ++r) {
          for (const auto& c : scope.sources[r].rel->columns) {
            for (std::size_t l = 0; l < left_count; ++l) {
              if (visible_column(scope.sources[l], c.name)) {
                merge_cols.push_back(c.name);
                break;
              }
            }
          }
        }
      }
      for (const auto& col : merge_cols) {
        const RelColumn* left = nullptr;
        for (std::size_t l = 0; l < left_count && !left; ++l) left = visible_column(scope.sources[l], col);
        if (!left) throw LineageError("cannot join using column " + col + " - column not present in both tables");
        into.predicates.insert(left->origins.begin(), left->origins.end());
        bool found = false;
        for (std::size_t r = right_begin; r < scope.sources.size(); ++r) {
          if (const RelColumn* right = visible_column(scope.sources[r], col)) {
            into.predicates.insert(right->origins.begin(), right->origins.end());
            scope.sources[r].merged.insert(col);
            found = true;
            break;
          }
        }
        if (!found) throw LineageError("cannot join using column " + col + " - column not present in both tables");
      }
      if (item.on) predicate(*item.on, scope, into);
    }
  }

  // ---- column resolution ----------------------------------------------------

  const ColumnSet* lookup(const Expr& col, const Scope& scope, std::string* resolved_name) const {
    for (const Scope* sc = &scope; sc; sc = sc->outer) {
      if (!col.qualifier.empty()) {
        for (const auto& s : sc->sources) {
          if (!iequals(s.alias, col.qualifier)) continue;
          for (const auto& c : s.rel->columns) {
            if (iequals(c.name, col.name)) {
              if (resolved_name) *resolved_name = c.name;
              return &c.origins;
            }
          }
          if (is_rowid_alias(col.name)) return &empty_;
          throw LineageError("no such column: " + col.qualifier + "." + col.name);
        }
        continue;
      }
      const RelColumn* hit = nullptr;
      for (const auto& s : sc->sources) {
        if (const RelColumn* c = visible_column(s, col.name)) {
          if (hit) throw LineageError("ambiguous column name: " + col.name);
          hit = c;
        }
      }
      if (hit) {
        if (resolved_name) *resolved_name = hit->name;
        return &hit->origins;
      }
      if (sc->aliases) {
        for (const auto& [alias, origins] : *sc->aliases) {
          if (iequals(alias, col.name)) return &origins;
        }
      }
    }
    if (col.qualifier.empty() && is_rowid_alias(col.name)) return &empty_;
    if (col.qualifier.empty() && col.quoted) return &empty_;  // SQLite reads unknown "x" as a string literal
    throw LineageError("no such column: " + (col.qualifier.empty() ? "" : col.qualifier + ".") + col.name);
  }

  // ---- expressions ----------------------------------------------------------

  /// Columns whose values flow into the expression result go to `out`;
  /// columns only used for filtering/membership go to `into.predicates`.
  void value(const Expr& e, const Scope& scope, Relation& into, ColumnSet& out) {
    switch (e.kind) {
      case ExprKind::literal:
      case ExprKind::star:
      case ExprKind::raise:
        return;
      case ExprKind::column: {
        const ColumnSet* origins = lookup(e, scope, nullptr);
        out.insert(origins->begin(), origins->end());
        return;
      }
      case ExprKind::in_select: {
        value(*e.args[0], scope, into, out);
        subquery_predicates(*e.subquery, scope, into);
        return;
      }
      case ExprKind::exists:
        subquery_predicates(*e.subquery, scope, into);
        return;
      case ExprKind::in_table: {
        value(*e.args[0], scope, into, out);
        for (std::size_t i = 1; i < e.args.size(); ++i) predicate(*e.args[i], scope, into);
        auto rel = named_relation(e.name);
        for (const auto& c : rel->columns) into.predicates.insert(c.origins.begin(), c.origins.end());
        into.predicates.insert(rel->predicates.begin(), rel->predicates.end());
        return;
      }
      case ExprKind::subquery: {
        Relation rel = select(*e.subquery, &scope);
        for (const auto& c : rel.columns) out.insert(c.origins.begin(), c.origins.end());
        into.predicates.insert(rel.predicates.begin(), rel.predicates.end());
        return;
      }
      case ExprKind::function: {
        for (const auto& a : e.args) value(*a, scope, into, out);
        if (e.filter) predicate(*e.filter, scope, into);
        if (e.over) window(*e.over, scope, into);
        return;
      }
      default:
        for (const auto& a : e.args) value(*a, scope, into, out);
        return;
    }
  }

  void predicate(const Expr& e, const Scope& scope, Relation& into) {
    ColumnSet cols;
    value(e, scope, into, cols);
    into.predicates.insert(cols.begin(), cols.end());
  }

  void window(const sql::WindowSpec& w, const Scope& scope, Relation& into) {
    for (const auto& p : w.partition) predicate(*p, scope, into);
    for (const auto& o : w.order) predicate(*o.expr, scope, into);
  }

  void subquery_predicates(const sql::Select& s, const Scope& scope, Relation& into) {
    Relation rel = select(s, &scope);
    for (const auto& c : rel.columns) into.predicates.insert(c.origins.begin(), c.origins.end());
    into.predicates.insert(rel.predicates.begin(), rel.predicates.end());
  }

  // ---- SELECT core ----------------------------------------------------------

  Relation core(const sql::SelectCore& core, const Scope* outer) {
    Relation out;
    if (core.is_values) {
      Scope empty;
      empty.outer = outer;
      const std::size_t width = core.values.front().size();
      out.columns.resize(width);
      for (std::size_t i = 0; i < width; ++i) out.columns[i].name = "column" + std::to_string(i + 1);
      for (const auto& row : core.values) {
        if (row.size() != width) throw LineageError("all VALUES must have the same number of terms");
        for (std::size_t i = 0; i < width; ++i) value(*row[i], empty, out, out.columns[i].origins);
      }
      return out;
    }

    Scope scope;
    scope.outer = outer;
    join_list(core.from, scope, out);

    for (const auto& rc : core.columns) {
      switch (rc.kind) {
        case sql::ResultColumn::Kind::star: {
          if (scope.sources.empty()) throw LineageError("no tables specified");
          for (const auto& s : scope.sources)
            for (const auto& c : s.rel->columns)
              if (!s.merged.count(c.name)) out.columns.push_back(c);
          break;
        }
        case sql::ResultColumn::Kind::table_star: {
          const Source* src = nullptr;
          for (const auto& s : scope.sources)
            if (iequals(s.alias, rc.table)) src = &s;
          if (!src) throw LineageError("no such table: " + rc.table);
          for (const auto& c : src->rel->columns) out.columns.push_back(c);
          break;
        }
        case sql::ResultColumn::Kind::expr: {
          RelColumn col;
          value(*rc.expr, scope, out, col.origins);
          if (!rc.alias.empty()) {
            col.name = rc.alias;
          } else if (rc.expr->kind == ExprKind::column) {
            std::string resolved;
            lookup(*rc.expr, scope, &resolved);
            col.name = resolved.empty() ? rc.expr->name : resolved;
          } else {
            col.name = span_text(rc.span);
          }
          out.columns.push_back(std::move(col));
          break;
        }
      }
    }

    std::vector<std::pair<std::string, ColumnSet>> aliases;
    for (std::size_t i = 0; i < core.columns.size() && i < out.columns.size(); ++i) {
      if (!core.columns[i].alias.empty()) aliases.emplace_back(core.columns[i].alias, out.columns[i].origins);
    }
    scope.aliases = &aliases;
    if (core.where) predicate(*core.where, scope, out);
    for (const auto& g : core.group_by) predicate(*g, scope, out);
    if (core.having) predicate(*core.having, scope, out);
    for (const auto& [name, w] : core.windows) window(w, scope, out);
    return out;
  }

  std::string_view sql_;
  const SchemaSnapshot& snapshot_;
  const Catalog& catalog_;
  std::vector<CteFrame> ctes_;
  const ColumnSet empty_;
};

}  // namespace

std::pair<ViewDefinition, Lineage> resolve_lineage(const ViewDefinition& view, const SchemaSnapshot& snapshot,
                                                    const Catalog& catalog) {
  if (view.referenced_objects.count(view.name)) throw LineageError("cyclic reference: view " + view.name + " references itself");
  sql::CreateView ast;
  try {
    ast = sql::parse_create_view(view.sql);
  } catch (const ParseError& e) {
    throw LineageError(std::string("cannot parse view: ") + e.what());
  }
  Resolver resolver(view.sql, snapshot, catalog);
  // The view's own name must not resolve to a catalog entry of the same name.
  if (catalog.contains(view.name)) throw LineageError("cyclic reference: view " + view.name + " is already defined");

  Relation rel = resolver.select(*ast.select, nullptr);
  if (!ast.columns.empty()) {
    if (ast.columns.size() != rel.columns.size()) {
      throw LineageError("expected " + std::to_string(ast.columns.size()) + " columns for '" + view.name + "' but got " +
                         std::to_string(rel.columns.size()));
    }
    for (std::size_t i = 0; i < ast.columns.size(); ++i) rel.columns[i].name = ast.columns[i];
  }
  dedupe_names(rel.columns);

  ViewDefinition expanded = view;
  expanded.output_columns.clear();
  Lineage lineage;
  for (auto& c : rel.columns) {
    for (const auto& origin : c.origins) {
      if (!snapshot.has_column(origin)) throw LineageError("lineage names unknown column " + origin.qualified());
    }
    expanded.output_columns.push_back(c.name);
    lineage.columns.push_back({c.name, std::move(c.origins)});
  }
  if (lineage.columns.empty()) throw LineageError("view " + view.name + " has no output columns");
  lineage.predicate_columns = std::move(rel.predicates);
  return {std::move(expanded), std::move(lineage)};
}

}  // namespace semlayer
