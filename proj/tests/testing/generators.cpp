#include "testing/generators.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace semlayer::testing {

namespace {

std::size_t pick(std::mt19937& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool coin(std::mt19937& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

// Joins definition lines, placing each separating comma before any trailing comment.
std::string table_ddl(const std::string& name, const std::vector<std::string>& lines) {
  std::string out = "CREATE TABLE " + name + " (\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (i + 1 < lines.size()) {
      const auto dash = line.find(" -- ");
      if (dash == std::string::npos) line += ",";
      else line.insert(dash, ",");
    }
    out += line + "\n";
  }
  return out + ");\n";
}

}  // namespace

GeneratedDdl star_schema_ddl(std::size_t dimensions, std::uint32_t seed) {
  std::mt19937 rng(seed);
  GeneratedDdl out;
  std::ostringstream ddl;
  for (std::size_t d = 0; d < dimensions; ++d) {
    const std::size_t extra = 1 + pick(rng, 4);
    std::vector<std::string> lines = {"  dim_" + std::to_string(d) + "_id INTEGER PRIMARY KEY"};
    for (std::size_t c = 0; c < extra; ++c) lines.push_back("  attr_" + std::to_string(c) + " TEXT -- attribute " + std::to_string(c));
    ddl << table_ddl("dim_" + std::to_string(d), lines);
    out.manifest.columns += 1 + extra;
  }
  std::vector<std::string> lines = {"  fact_id INTEGER PRIMARY KEY"};
  for (std::size_t d = 0; d < dimensions; ++d) {
    const auto dim = "dim_" + std::to_string(d);
    lines.push_back("  " + dim + "_id INTEGER REFERENCES " + dim + " (" + dim + "_id)");
  }
  lines.push_back("  amount REAL");
  ddl << table_ddl("fact", lines);
  out.manifest.columns += dimensions + 2;
  out.manifest.tables = dimensions + 1;
  out.manifest.foreign_keys = dimensions;
  out.ddl = ddl.str();
  return out;
}

GeneratedDdl random_schema_ddl(std::size_t tables, std::uint32_t seed) {
  std::mt19937 rng(seed);
  static const std::vector<std::string> types = {"INTEGER", "TEXT", "REAL", "VARCHAR(32)", "DECIMAL(10,2)", "BLOB", ""};
  GeneratedDdl out;
  std::ostringstream ddl;
  // (table, pk columns) for reference targets
  std::vector<std::pair<std::string, std::vector<std::string>>> made;
  for (std::size_t t = 0; t < tables; ++t) {
    const bool upper = coin(rng, 0.3);
    std::string name = (upper ? "TBL_" : "tbl_") + std::to_string(t);
    const bool composite = coin(rng, 0.25);
    std::vector<std::string> cols;
    std::vector<std::string> lines;
    std::vector<std::string> pk = composite ? std::vector<std::string>{"k1", "k2"} : std::vector<std::string>{"id"};
    for (const auto& k : pk) {
      cols.push_back(k);
      lines.push_back("  " + k + " INTEGER" + (composite ? "" : " PRIMARY KEY") + " -- key " + k);
    }
    const std::size_t extra = 1 + pick(rng, 5);
    for (std::size_t c = 0; c < extra; ++c) {
      std::string col = (coin(rng, 0.2) ? "\"Col " : "col_") + std::to_string(c) + (coin(rng, 0.2) ? "\"" : "");
      if (col.front() == '"' && col.back() != '"') col += "\"";
      if (col.front() != '"' && col.back() == '"') col.pop_back();
      const auto& ty = types[pick(rng, types.size())];
      lines.push_back("  " + col + (ty.empty() ? "" : " " + ty) + (coin(rng) ? " -- column " + std::to_string(c) : ""));
      cols.push_back(col);
    }
    std::vector<std::string> constraints;
    if (composite) constraints.push_back("  PRIMARY KEY (k1, k2)");
    std::size_t fks = 0;
    if (!made.empty() && coin(rng, 0.7)) {
      const auto& target = made[pick(rng, made.size())];
      std::string from, to;
      for (std::size_t i = 0; i < target.second.size(); ++i) {
        std::string ref = "ref_" + target.first + "_" + std::to_string(i);
        lines.push_back("  " + ref + " INTEGER");
        cols.push_back(ref);
        from += (i ? ", " : "") + ref;
        to += (i ? ", " : "") + target.second[i];
      }
      constraints.push_back("  FOREIGN KEY (" + from + ") REFERENCES " + target.first + " (" + to + ")");
      fks += target.second.size();
    }
    std::vector<std::string> all = lines;
    all.insert(all.end(), constraints.begin(), constraints.end());
    ddl << table_ddl(name, all);
    out.manifest.tables += 1;
    out.manifest.columns += cols.size();
    out.manifest.foreign_keys += fks;
    made.emplace_back(name, pk);
  }
  out.ddl = ddl.str();
  return out;
}

std::vector<std::size_t> widths_with_marginals(std::size_t count, std::size_t total_columns,
                                               std::size_t total_relations, std::size_t median,
                                               std::size_t max_width) {
  if (count == 0) return {};
  const std::size_t mid = (count - 1) / 2;
  std::vector<std::size_t> w(count, median);
  const std::size_t cap = max_width ? max_width : total_columns;
  std::size_t fixed_top = count;  // index of a table pinned at max_width
  if (max_width) {
    fixed_top = count - 1;
    w[fixed_top] = max_width;
  }
  auto sum = [&] { return std::accumulate(w.begin(), w.end(), std::size_t{0}); };
  auto sumsq = [&] {
    std::size_t s = 0;
    for (auto x : w) s += x * x;
    return s;
  };
  // Fix the column total by shrinking lows or growing highs.
  std::size_t s = sum();
  for (std::size_t i = 0; s > total_columns && i < mid; ++i) {
    const std::size_t take = std::min(s - total_columns, w[i] - 1);
    w[i] -= take;
    s -= take;
  }
  // spread growth evenly so the square sum starts as low as possible
  for (bool grew = true; s < total_columns && grew;) {
    grew = false;
    for (std::size_t i = mid + 1; s < total_columns && i < count; ++i) {
      if (i == fixed_top || w[i] >= cap) continue;
      ++w[i];
      ++s;
      grew = true;
    }
  }
  if (s != total_columns) throw std::runtime_error("cannot reach column total");

  const std::size_t target = 2 * total_relations + total_columns;  // sum of w^2
  auto movable_low = [&](std::size_t i) { return i < mid && w[i] > 1; };
  auto room_high = [&](std::size_t j) { return j > mid && j != fixed_top && w[j] < cap; };
  for (int guard = 0; guard < 10'000'000; ++guard) {
    const std::size_t sq = sumsq();
    if (sq == target) return w;
    if (sq > target) throw std::runtime_error("overshot the relation total");
    const std::size_t diff = target - sq;
    // best single move i -> j with 2(w_j - w_i + 1) <= diff, over lows->highs and highs->highs
    long best_gain = 0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const bool low_ok = movable_low(i);
      const bool high_ok = i > mid && i != fixed_top && w[i] > median;
      if (!low_ok && !high_ok) continue;
      for (std::size_t j = mid + 1; j < count; ++j) {
        if (j == i || !room_high(j)) continue;
        const long gain = 2 * (static_cast<long>(w[j]) - static_cast<long>(w[i]) + 1);
        if (gain > 0 && static_cast<std::size_t>(gain) <= diff && gain > best_gain) {
          best_gain = gain;
          bi = i;
          bj = j;
        }
      }
      // low -> low move (keeps both at or below the median)
      if (low_ok) {
        for (std::size_t j = 0; j < mid; ++j) {
          if (j == i || w[j] + 1 > median) continue;
          const long gain = 2 * (static_cast<long>(w[j]) - static_cast<long>(w[i]) + 1);
          if (gain > 0 && static_cast<std::size_t>(gain) <= diff && gain > best_gain) {
            best_gain = gain;
            bi = i;
            bj = j;
          }
        }
      }
    }
    if (best_gain == 0) throw std::runtime_error("no move reaches the relation total");
    --w[bi];
    ++w[bj];
  }
  throw std::runtime_error("width search did not converge");
}

SchemaSnapshot snapshot_from_widths(const std::vector<std::size_t>& widths, const std::string& prefix) {
  std::vector<TableDef> tables;
  for (std::size_t t = 0; t < widths.size(); ++t) {
    TableDef def;
    std::ostringstream name;
    name << prefix << std::string(3 - std::min<std::size_t>(3, std::to_string(t).size()), '0') << t;
    def.name = name.str();
    for (std::size_t c = 0; c < widths[t]; ++c) def.columns.push_back({"C" + std::to_string(c), "TEXT", "", false});
    tables.push_back(std::move(def));
  }
  return SchemaSnapshot(std::move(tables), {});
}

// ---- sentinel fixture --------------------------------------------------------

std::string sentinel_token(std::string_view table, std::string_view column, std::size_t row) {
  return "#" + std::string(table) + "." + std::string(column) + "." + std::to_string(row) + "#";
}

SentinelFixture sentinel_fixture(std::size_t tables, std::uint32_t seed, std::size_t rows_per_table) {
  std::mt19937 rng(seed);
  SentinelFixture fx;
  std::vector<TableDef> defs;
  std::vector<ForeignKeyDef> fks;
  for (std::size_t t = 0; t < tables; ++t) {
    TableDef def;
    def.name = "t" + std::to_string(t);
    def.columns.push_back({"id", "INTEGER", "row key", true});
    if (t > 0 && coin(rng, 0.8)) {
      const std::size_t parent = pick(rng, t);
      const std::string col = "t" + std::to_string(parent) + "_id";
      def.columns.push_back({col, "INTEGER", "reference to t" + std::to_string(parent), false});
      fks.push_back({{def.name, col}, {"t" + std::to_string(parent), "id"}, FkProvenance::declared, fks.size()});
      fx.joins.emplace_back(def.name, "t" + std::to_string(parent));
    }
    const std::size_t text_cols = 2 + pick(rng, 4);
    for (std::size_t c = 1; c <= text_cols; ++c) def.columns.push_back({"c" + std::to_string(c), "TEXT", "", false});
    std::vector<Row> rows;
    for (std::size_t r = 0; r < rows_per_table; ++r) {
      Row row;
      for (const auto& col : def.columns) {
        if (col.name == "id") {
          row.emplace_back(std::to_string(1000 + r));
        } else if (col.name.ends_with("_id")) {
          row.emplace_back(std::to_string(1000 + (r * 7 + 3) % rows_per_table));
        } else if (r % 5 == 4 && col.name == "c2") {
          row.emplace_back(std::nullopt);  // a few NULLs for COALESCE shapes
        } else {
          row.emplace_back(sentinel_token(def.name, col.name, r));
        }
      }
      rows.push_back(std::move(row));
    }
    fx.data.emplace_back(def.name, std::move(rows));
    defs.push_back(std::move(def));
  }
  fx.snapshot = SchemaSnapshot(std::move(defs), std::move(fks));
  return fx;
}

// ---- view generator ----------------------------------------------------------

ViewGenerator::ViewGenerator(const SentinelFixture& fixture, std::uint32_t seed) : fixture_(fixture), rng_(seed) {}

const std::vector<std::string>& ViewGenerator::shapes() {
  static const std::vector<std::string> all = {
      "projection", "star",     "table_star", "join",     "left_join",   "aggregate", "concat",
      "case",       "coalesce", "subquery",   "cte",      "in_subquery", "exists",    "union",
      "scalar",     "literal",  "window",     "view_on_view"};
  return all;
}

const TableDef& ViewGenerator::random_table() {
  const auto& tables = fixture_.snapshot.tables();
  return tables[pick(rng_, tables.size())];
}

std::vector<const ColumnDef*> ViewGenerator::text_columns(const TableDef& t) {
  std::vector<const ColumnDef*> out;
  for (const auto& c : t.columns)
    if (c.type == "TEXT") out.push_back(&c);
  return out;
}

GeneratedView ViewGenerator::next() {
  const auto& all = shapes();
  return next(all[pick(rng_, all.size())]);
}

GeneratedView ViewGenerator::next(const std::string& requested) {
  std::string shape = requested;
  if ((shape == "join" || shape == "left_join" || shape == "in_subquery" || shape == "exists") && fixture_.joins.empty()) {
    shape = "projection";
  }
  if (shape == "view_on_view" && views_.empty()) shape = "projection";

  GeneratedView v;
  v.shape = shape;
  v.name = "gv" + std::to_string(counter_++) + "_" + shape;
  const auto ref = [](const TableDef& t, const ColumnDef* c) { return ColumnRef{t.name, c->name}; };
  std::string body;

  if (shape == "projection") {
    const auto& t = random_table();
    auto cols = text_columns(t);
    std::shuffle(cols.begin(), cols.end(), rng_);
    const std::size_t n = 1 + pick(rng_, cols.size());
    body = "SELECT ";
    for (std::size_t i = 0; i < n; ++i) {
      const bool alias = coin(rng_);
      const std::string out = alias ? "p" + std::to_string(i) : cols[i]->name;
      body += (i ? ", " : "") + cols[i]->name + (alias ? " AS " + out : "");
      v.outputs.emplace_back(out, ColumnSet{ref(t, cols[i])});
    }
    body += " FROM " + t.name;
    if (coin(rng_)) {
      body += " WHERE id >= 1001";
      v.predicates.insert({t.name, "id"});
    }
    v.pure_projection = true;
  } else if (shape == "star") {
    const auto& t = random_table();
    body = "SELECT * FROM " + t.name;
    for (const auto& c : t.columns) v.outputs.emplace_back(c.name, ColumnSet{{t.name, c.name}});
    v.pure_projection = true;
  } else if (shape == "table_star") {
    const auto& t = random_table();
    auto cols = text_columns(t);
    body = "SELECT x.* FROM " + t.name + " AS x WHERE x." + cols[0]->name + " IS NOT NULL";
    for (const auto& c : t.columns) v.outputs.emplace_back(c.name, ColumnSet{{t.name, c.name}});
    v.predicates.insert(ref(t, cols[0]));
    v.pure_projection = true;
  } else if (shape == "join" || shape == "left_join") {
    const auto& [child_name, parent_name] = fixture_.joins[pick(rng_, fixture_.joins.size())];
    const TableDef& child = *fixture_.snapshot.find_table(child_name);
    const TableDef& parent = *fixture_.snapshot.find_table(parent_name);
    const std::string fk = parent.name + "_id";
    auto cc = text_columns(child);
    auto pc = text_columns(parent);
    const auto* a = cc[pick(rng_, cc.size())];
    const auto* b = pc[pick(rng_, pc.size())];
    body = "SELECT ch." + a->name + " AS child_" + a->name + ", pa." + b->name + " AS parent_" + b->name;
    v.outputs.emplace_back("child_" + a->name, ColumnSet{ref(child, a)});
    v.outputs.emplace_back("parent_" + b->name, ColumnSet{ref(parent, b)});
    if (coin(rng_)) {
      body += ", ch." + fk;  // the join key as written: the child's column
      v.outputs.emplace_back(fk, ColumnSet{{child.name, fk}});
    }
    body += " FROM " + child.name + " ch " + (shape == "left_join" ? "LEFT JOIN " : "JOIN ") + parent.name +
            " pa ON ch." + fk + " = pa.id";
    v.predicates.insert({child.name, fk});
    v.predicates.insert({parent.name, "id"});
    v.pure_projection = true;
  } else if (shape == "aggregate") {
    const auto& t = random_table();
    auto cols = text_columns(t);
    std::shuffle(cols.begin(), cols.end(), rng_);
    body = "SELECT " + cols[0]->name + ", MAX(" + cols[1]->name + ") AS mx, COUNT(*) AS n FROM " + t.name +
           " GROUP BY " + cols[0]->name;
    v.outputs.emplace_back(cols[0]->name, ColumnSet{ref(t, cols[0])});
    v.outputs.emplace_back("mx", ColumnSet{ref(t, cols[1])});
    v.outputs.emplace_back("n", ColumnSet{});
    v.predicates.insert(ref(t, cols[0]));
    if (coin(rng_)) body += " HAVING COUNT(*) >= 1";
  } else if (shape == "concat") {
    const auto& t = random_table();
    auto cols = text_columns(t);
    std::shuffle(cols.begin(), cols.end(), rng_);
    body = "SELECT " + cols[0]->name + " || '|' || " + cols[1]->name + " AS joined FROM " + t.name;
    v.outputs.emplace_back("joined", ColumnSet{ref(t, cols[0]), ref(t, cols[1])});
  } else if (shape == "case") {
    const auto& t = random_table();
    auto cols = text_columns(t);
    std::shuffle(cols.begin(), cols.end(), rng_);
    body = "SELECT CASE WHEN id > 1002 THEN " + cols[0]->name + " ELSE " + cols[1]->name + " END AS pick FROM " + t.name;
    v.outputs.emplace_back("pick", ColumnSet{{t.name, "id"}, ref(t, cols[0]), ref(t, cols[1])});
  } else if (shape == "coalesce") {
    const auto& t = random_table();
    const ColumnDef* c2 = t.find("c2");
    const ColumnDef* c1 = t.find("c1");
    body = "SELECT id AS key, COALESCE(c2, c1) AS filled FROM " + t.name;
    v.outputs.emplace_back("key", ColumnSet{{t.name, "id"}});
    v.outputs.emplace_back("filled", ColumnSet{ref(t, c2), ref(t, c1)});
  } else if (shape == "subquery") {
    const auto& t = random_table();
    auto cols = text_columns(t);
    std::shuffle(cols.begin(), cols.end(), rng_);
    body = "SELECT s." + cols[0]->name + " AS inner_col FROM (SELECT " + cols[0]->name + ", " + cols[1]->name +
           " FROM " + t.name + " WHERE " + cols[1]->name + " IS NOT NULL) AS s";
    v.outputs.emplace_back("inner_col", ColumnSet{ref(t, cols[0])});
    v.predicates.insert(ref(t, cols[1]));
  } else if (shape == "cte") {
    const auto& t = random_table();
    auto cols = text_columns(t);
    body = "WITH w AS (SELECT id, " + cols[0]->name + " FROM " + t.name + ") SELECT w." + cols[0]->name +
           " AS from_cte FROM w WHERE w.id >= 1000";
    v.outputs.emplace_back("from_cte", ColumnSet{ref(t, cols[0])});
    v.predicates.insert({t.name, "id"});
  } else if (shape == "in_subquery") {
    const auto& [child_name, parent_name] = fixture_.joins[pick(rng_, fixture_.joins.size())];
    const TableDef& parent = *fixture_.snapshot.find_table(parent_name);
    auto pc = text_columns(parent);
    const auto* a = pc[pick(rng_, pc.size())];
    const std::string fk = parent.name + "_id";
    body = "SELECT " + a->name + " FROM " + parent.name + " WHERE id IN (SELECT " + fk + " FROM " + child_name + ")";
    v.outputs.emplace_back(a->name, ColumnSet{ref(parent, a)});
    v.predicates.insert({parent.name, "id"});
    v.predicates.insert({child_name, fk});
    v.pure_projection = true;
  } else if (shape == "exists") {
    const auto& [child_name, parent_name] = fixture_.joins[pick(rng_, fixture_.joins.size())];
    const TableDef& parent = *fixture_.snapshot.find_table(parent_name);
    auto pc = text_columns(parent);
    const auto* a = pc[pick(rng_, pc.size())];
    const std::string fk = parent.name + "_id";
    body = "SELECT p." + a->name + " AS referenced FROM " + parent.name + " p WHERE EXISTS (SELECT 1 FROM " +
           child_name + " c WHERE c." + fk + " = p.id)";
    v.outputs.emplace_back("referenced", ColumnSet{ref(parent, a)});
    v.predicates.insert({parent.name, "id"});
    v.predicates.insert({child_name, fk});
  } else if (shape == "union") {
    const auto& t1 = random_table();
    const auto& t2 = random_table();
    auto c1 = text_columns(t1);
    auto c2 = text_columns(t2);
    const auto* a = c1[pick(rng_, c1.size())];
    const auto* b = c2[pick(rng_, c2.size())];
    body = "SELECT " + a->name + " AS merged FROM " + t1.name + " UNION SELECT " + b->name + " FROM " + t2.name;
    v.outputs.emplace_back("merged", ColumnSet{ref(t1, a), ref(t2, b)});
  } else if (shape == "scalar") {
    const auto& t1 = random_table();
    const auto& t2 = random_table();
    auto c1 = text_columns(t1);
    auto c2 = text_columns(t2);
    const auto* a = c1[pick(rng_, c1.size())];
    const auto* b = c2[pick(rng_, c2.size())];
    body = "SELECT o." + a->name + " AS own, (SELECT MIN(q." + b->name + ") FROM " + t2.name + " q) AS lowest FROM " +
           t1.name + " o";
    v.outputs.emplace_back("own", ColumnSet{ref(t1, a)});
    v.outputs.emplace_back("lowest", ColumnSet{ref(t2, b)});
  } else if (shape == "literal") {
    const auto& t = random_table();
    auto cols = text_columns(t);
    const auto* a = cols[pick(rng_, cols.size())];
    body = "SELECT " + a->name + ", 'constant' AS tag, 42 AS answer FROM " + t.name;
    v.outputs.emplace_back(a->name, ColumnSet{ref(t, a)});
    v.outputs.emplace_back("tag", ColumnSet{});
    v.outputs.emplace_back("answer", ColumnSet{});
  } else if (shape == "window") {
    const auto& t = random_table();
    auto cols = text_columns(t);
    std::shuffle(cols.begin(), cols.end(), rng_);
    body = "SELECT " + cols[0]->name + ", ROW_NUMBER() OVER (PARTITION BY " + cols[1]->name +
           " ORDER BY id) AS rn FROM " + t.name;
    v.outputs.emplace_back(cols[0]->name, ColumnSet{ref(t, cols[0])});
    v.outputs.emplace_back("rn", ColumnSet{});
    v.predicates.insert(ref(t, cols[1]));
    v.predicates.insert({t.name, "id"});
  } else if (shape == "view_on_view") {
    const Known& inner = views_[pick(rng_, views_.size())];
    std::vector<std::size_t> idx(inner.outputs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng_);
    const std::size_t n = 1 + pick(rng_, idx.size());
    std::string select_list;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& [name, origins] = inner.outputs[idx[i]];
      select_list += (i ? ", " : "") + std::string("iv.\"") + name + "\" AS o" + std::to_string(i);
      v.outputs.emplace_back("o" + std::to_string(i), origins);
    }
    v.predicates = inner.predicates;
    std::string where;
    if (n < idx.size() && coin(rng_)) {
      const auto& [name, origins] = inner.outputs[idx[n]];
      where = " WHERE iv.\"" + name + "\" IS NOT NULL";
      v.predicates.insert(origins.begin(), origins.end());
    }
    body = "SELECT " + select_list + " FROM " + inner.name + " iv" + where;
    v.inlined_sql = "CREATE VIEW " + v.name + "_inlined AS SELECT " + select_list + " FROM (" + inner.select_sql +
                    ") AS iv" + where;
  }

  v.sql = "CREATE VIEW " + v.name + " AS " + body;
  views_.push_back({v.name, body, v.outputs, v.predicates});
  return v;
}

// ---- graphs ------------------------------------------------------------------

RandomGraph random_graph(std::size_t max_nodes, std::mt19937& rng) {
  RandomGraph g;
  g.nodes = 1 + pick(rng, max_nodes);
  if (g.nodes < 2) return g;
  const double density = std::uniform_real_distribution<double>(0.0, 2.5)(rng);
  const auto m = static_cast<std::size_t>(density * static_cast<double>(g.nodes));
  for (std::size_t e = 0; e < m; ++e) {
    std::size_t a = pick(rng, g.nodes), b = pick(rng, g.nodes);
    if (a == b) continue;
    g.edges.emplace_back(a, b);
  }
  return g;
}

SchemaSnapshot snapshot_from_graph(const RandomGraph& g) {
  auto node_name = [](std::size_t i) {
    std::string s = std::to_string(i);
    return "N" + std::string(3 - std::min<std::size_t>(3, s.size()), '0') + s;
  };
  std::vector<TableDef> tables(g.nodes);
  for (std::size_t i = 0; i < g.nodes; ++i) {
    tables[i].name = node_name(i);
    tables[i].columns.push_back({"id", "INTEGER", "", true});
  }
  std::vector<ForeignKeyDef> fks;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto [a, b] = g.edges[e];
    const std::string col = "ref_" + std::to_string(e);
    tables[a].columns.push_back({col, "INTEGER", "", false});
    fks.push_back({{node_name(a), col}, {node_name(b), "id"}, FkProvenance::declared, e});
  }
  return SchemaSnapshot(std::move(tables), std::move(fks));
}

}  // namespace semlayer::testing
