#include "semlayer/sql/parser.hpp"

#include <array>
#include <cctype>

#include "semlayer/errors.hpp"
#include "semlayer/identifiers.hpp"

namespace semlayer::sql {

namespace {

// Words that can never be a bare alias or a bare column name.
constexpr std::array kReserved = {
    "ALL",       "AND",     "AS",      "ASC",     "BETWEEN",   "BY",        "CASE",
    "CAST",      "COLLATE", "CREATE",  "CROSS",   "DESC",      "DISTINCT",  "ELSE",
    "END",       "ESCAPE",  "EXCEPT",  "EXISTS",  "FILTER",    "FROM",      "FULL",
    "GLOB",      "GROUP",   "HAVING",  "IN",      "INDEXED",   "INNER",     "INTERSECT",
    "INTO",      "IS",      "ISNULL",  "JOIN",    "LEFT",      "LIKE",      "LIMIT",
    "MATCH",     "NATURAL", "NOT",     "NOTNULL", "NULL",      "OFFSET",    "ON",
    "OR",        "ORDER",   "OUTER",   "OVER",    "REGEXP",    "RIGHT",     "SELECT",
    "THEN",      "UNION",   "USING",   "VALUES",  "WHEN",      "WHERE",     "WINDOW",
    "WITH",
};

bool is_reserved(const Token& t) {
  if (t.kind != TokenKind::identifier) return false;
  for (const char* kw : kReserved)
    if (iequals(t.text, kw)) return true;
  return false;
}

std::string trim_copy(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

ExprPtr make_expr(ExprKind kind, Span span) {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->span = span;
  return e;
}

class Parser {
 public:
  Parser(std::string_view sql, std::size_t stmt) : sql_(sql), stmt_(stmt) {
    auto lexed = tokenize(sql, stmt);
    toks_ = std::move(lexed.tokens);
    comments_ = std::move(lexed.comments);
  }

  SelectPtr select_statement() {
    auto s = select();
    finish();
    return s;
  }

  CreateView create_view() {
    CreateView v;
    expect_kw("CREATE");
    if (accept_kw("TEMP") || accept_kw("TEMPORARY")) v.temporary = true;
    expect_kw("VIEW");
    if (accept_kw("IF")) {
      expect_kw("NOT");
      expect_kw("EXISTS");
      v.if_not_exists = true;
    }
    v.name_span = cur().span;
    v.name = name("view name");
    if (accept_punct(".")) {
      v.schema = v.name;
      v.name_span = cur().span;
      v.name = name("view name");
    }
    if (accept_punct("(")) {
      do {
        v.columns.push_back(name("column name"));
      } while (accept_punct(","));
      expect_punct(")");
    }
    expect_kw("AS");
    const std::size_t begin = cur().span.begin;
    v.select = select();
    v.select_span = {begin, prev().span.end};
    finish();
    return v;
  }

  CreateTable create_table() {
    CreateTable t;
    expect_kw("CREATE");
    accept_kw("TEMP") || accept_kw("TEMPORARY");
    expect_kw("TABLE");
    if (accept_kw("IF")) {
      expect_kw("NOT");
      expect_kw("EXISTS");
      t.if_not_exists = true;
    }
    t.name = name("table name");
    if (accept_punct(".")) {
      t.schema = t.name;
      t.name = name("table name");
    }
    if (cur().is_keyword("AS")) fail("CREATE TABLE ... AS SELECT is not supported");
    expect_punct("(");
    while (true) {
      if (starts_table_constraint()) {
        table_constraint(t);
      } else {
        const std::size_t first_line = cur().line;
        t.columns.push_back(column_def());
        std::size_t last_line = prev().line;
        if (cur().is_punct(",")) last_line = cur().line;
        for (const auto& c : comments_) {
          if (c.line >= first_line && c.line <= last_line && c.span.begin > toks_[0].span.begin) {
            auto& desc = t.columns.back().description;
            if (!desc.empty()) desc += ' ';
            desc += c.text;
          }
        }
      }
      if (accept_punct(",")) continue;
      expect_punct(")");
      break;
    }
    // table options: WITHOUT ROWID, STRICT
    while (!cur().is_punct(";") && cur().kind != TokenKind::end) {
      if (accept_kw("WITHOUT")) {
        expect_kw("ROWID");
      } else if (!accept_kw("STRICT")) {
        fail("unexpected token after table definition");
      }
      accept_punct(",");
    }
    finish();
    return t;
  }

 private:
  // ---- token helpers -------------------------------------------------------

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t k) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& prev() const { return toks_[pos_ == 0 ? 0 : pos_ - 1]; }
  void advance() {
    if (pos_ + 1 < toks_.size()) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = cur();
    const std::string shown = t.kind == TokenKind::end ? "end of input" : "\"" + t.text + "\"";
    throw ParseError(what + " near " + shown + " at offset " + std::to_string(t.span.begin), stmt_,
                     t.span.begin, t.text);
  }

  bool accept_kw(std::string_view kw) {
    if (!cur().is_keyword(kw)) return false;
    advance();
    return true;
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail("expected " + std::string(kw));
  }
  bool accept_punct(std::string_view p) {
    if (!cur().is_punct(p)) return false;
    advance();
    return true;
  }
  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail("expected '" + std::string(p) + "'");
  }

  void finish() {
    accept_punct(";");
    if (cur().kind != TokenKind::end) fail("unexpected trailing input");
  }

  bool starts_select() const {
    return cur().is_keyword("SELECT") || cur().is_keyword("WITH") || cur().is_keyword("VALUES");
  }

  std::string name(const char* what) {
    const Token& t = cur();
    if (t.kind == TokenKind::quoted_identifier || (t.kind == TokenKind::identifier && !is_reserved(t)) ||
        t.kind == TokenKind::string) {
      std::string v = t.value;
      advance();
      return v;
    }
    fail(std::string("expected ") + what);
  }

  bool at_alias_candidate() const {
    const Token& t = cur();
    return t.kind == TokenKind::quoted_identifier || (t.kind == TokenKind::identifier && !is_reserved(t)) ||
           t.kind == TokenKind::string;
  }

  Span span_from(std::size_t begin) const { return {begin, prev().span.end}; }

  // ---- SELECT --------------------------------------------------------------

  SelectPtr select() {
    auto s = std::make_unique<Select>();
    if (accept_kw("WITH")) {
      s->recursive = accept_kw("RECURSIVE");
      do {
        Cte cte;
        cte.name = name("CTE name");
        if (accept_punct("(")) {
          do {
            cte.columns.push_back(name("column name"));
          } while (accept_punct(","));
          expect_punct(")");
        }
        expect_kw("AS");
        if (accept_kw("NOT")) expect_kw("MATERIALIZED");
        else accept_kw("MATERIALIZED");
        expect_punct("(");
        cte.select = select();
        expect_punct(")");
        s->ctes.push_back(std::move(cte));
      } while (accept_punct(","));
    }
    s->cores.push_back(select_core());
    while (true) {
      std::string op;
      if (accept_kw("UNION")) op = accept_kw("ALL") ? "UNION ALL" : "UNION";
      else if (accept_kw("INTERSECT")) op = "INTERSECT";
      else if (accept_kw("EXCEPT")) op = "EXCEPT";
      else break;
      s->compound_ops.push_back(op);
      s->cores.push_back(select_core());
    }
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      s->order_by = order_terms();
    }
    if (accept_kw("LIMIT")) {
      s->limit = expr();
      if (accept_kw("OFFSET")) {
        s->offset = expr();
      } else if (accept_punct(",")) {
        s->offset = std::move(s->limit);
        s->limit = expr();
      }
    }
    return s;
  }

  SelectCore select_core() {
    SelectCore core;
    if (accept_kw("VALUES")) {
      core.is_values = true;
      do {
        expect_punct("(");
        std::vector<ExprPtr> row;
        do {
          row.push_back(expr());
        } while (accept_punct(","));
        expect_punct(")");
        core.values.push_back(std::move(row));
      } while (accept_punct(","));
      return core;
    }
    expect_kw("SELECT");
    if (accept_kw("DISTINCT")) core.distinct = true;
    else accept_kw("ALL");
    do {
      core.columns.push_back(result_column());
    } while (accept_punct(","));
    if (accept_kw("FROM")) core.from = join_list();
    if (accept_kw("WHERE")) core.where = expr();
    if (accept_kw("GROUP")) {
      expect_kw("BY");
      do {
        core.group_by.push_back(expr());
      } while (accept_punct(","));
    }
    if (accept_kw("HAVING")) core.having = expr();
    if (accept_kw("WINDOW")) {
      do {
        std::string wname = name("window name");
        expect_kw("AS");
        core.windows.emplace_back(std::move(wname), window_spec());
      } while (accept_punct(","));
    }
    return core;
  }

  ResultColumn result_column() {
    ResultColumn rc;
    const std::size_t begin = cur().span.begin;
    if (accept_punct("*")) {
      rc.kind = ResultColumn::Kind::star;
      rc.span = span_from(begin);
      return rc;
    }
    if (cur().is_word() && peek(1).is_punct(".") && peek(2).is_punct("*")) {
      rc.kind = ResultColumn::Kind::table_star;
      rc.table = cur().value;
      advance();
      advance();
      advance();
      rc.span = span_from(begin);
      return rc;
    }
    rc.expr = expr();
    rc.span = span_from(begin);
    if (accept_kw("AS")) {
      rc.alias = name("alias");
    } else if (at_alias_candidate()) {
      rc.alias = cur().value;
      advance();
    }
    return rc;
  }

  std::vector<OrderTerm> order_terms() {
    std::vector<OrderTerm> out;
    do {
      OrderTerm t;
      t.expr = expr();
      if (accept_kw("DESC")) t.descending = true;
      else accept_kw("ASC");
      if (accept_kw("NULLS")) {
        if (!accept_kw("FIRST")) expect_kw("LAST");
      }
      out.push_back(std::move(t));
    } while (accept_punct(","));
    return out;
  }

  std::vector<JoinItem> join_list() {
    std::vector<JoinItem> items;
    JoinItem first;
    first.ref = table_or_subquery();
    items.push_back(std::move(first));
    while (true) {
      JoinItem item;
      if (accept_punct(",")) {
        item.op = JoinOp::comma;
      } else {
        const std::size_t save = pos_;
        if (accept_kw("NATURAL")) item.natural = true;
        if (accept_kw("LEFT")) {
          accept_kw("OUTER");
          item.op = JoinOp::left;
        } else if (accept_kw("RIGHT")) {
          accept_kw("OUTER");
          item.op = JoinOp::right;
        } else if (accept_kw("FULL")) {
          accept_kw("OUTER");
          item.op = JoinOp::full;
        } else if (accept_kw("INNER")) {
          item.op = JoinOp::inner;
        } else if (accept_kw("CROSS")) {
          item.op = JoinOp::cross;
        } else {
          item.op = JoinOp::inner;
        }
        if (!accept_kw("JOIN")) {
          pos_ = save;
          break;
        }
      }
      item.ref = table_or_subquery();
      if (accept_kw("ON")) {
        item.on = expr();
      } else if (accept_kw("USING")) {
        expect_punct("(");
        do {
          item.using_columns.push_back(name("column name"));
        } while (accept_punct(","));
        expect_punct(")");
      }
      items.push_back(std::move(item));
    }
    return items;
  }

  TableRef table_or_subquery() {
    TableRef ref;
    if (accept_punct("(")) {
      if (starts_select()) {
        ref.kind = TableRef::Kind::subquery;
        ref.subquery = select();
      } else {
        ref.kind = TableRef::Kind::join_group;
        ref.group = join_list();
      }
      expect_punct(")");
    } else {
      ref.name_span = cur().span;
      ref.name = name("table name");
      if (accept_punct(".")) {
        ref.schema = ref.name;
        ref.name_span = cur().span;
        ref.name = name("table name");
      }
      if (accept_punct("(")) {
        ref.kind = TableRef::Kind::table_function;
        if (!cur().is_punct(")")) {
          do {
            ref.function_args.push_back(expr());
          } while (accept_punct(","));
        }
        expect_punct(")");
      }
    }
    if (accept_kw("AS")) {
      ref.alias = name("alias");
    } else if (at_alias_candidate() && cur().kind != TokenKind::string) {
      ref.alias = cur().value;
      advance();
    }
    if (accept_kw("INDEXED")) {
      expect_kw("BY");
      name("index name");
    } else if (cur().is_keyword("NOT") && peek(1).is_keyword("INDEXED")) {
      advance();
      advance();
    }
    return ref;
  }

  WindowSpec window_spec() {
    WindowSpec w;
    expect_punct("(");
    if (cur().kind == TokenKind::identifier && !is_reserved(cur()) && !cur().is_keyword("PARTITION") &&
        !cur().is_keyword("ROWS") && !cur().is_keyword("RANGE") && !cur().is_keyword("GROUPS")) {
      w.base = cur().value;
      advance();
    }
    if (accept_kw("PARTITION")) {
      expect_kw("BY");
      do {
        w.partition.push_back(expr());
      } while (accept_punct(","));
    }
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      w.order = order_terms();
    }
    // frame clause: only bounds expressions live here, skip to the closing paren
    int depth = 0;
    while (!(depth == 0 && cur().is_punct(")"))) {
      if (cur().kind == TokenKind::end) fail("unterminated window definition");
      if (cur().is_punct("(")) ++depth;
      if (cur().is_punct(")")) --depth;
      advance();
    }
    expect_punct(")");
    return w;
  }

  // ---- expressions ---------------------------------------------------------

  ExprPtr expr() { return or_expr(); }

  ExprPtr binary(std::string op, ExprPtr l, ExprPtr r) {
    auto e = make_expr(ExprKind::binary, {l->span.begin, r->span.end});
    e->op = std::move(op);
    e->args.push_back(std::move(l));
    e->args.push_back(std::move(r));
    return e;
  }

  ExprPtr or_expr() {
    auto l = and_expr();
    while (accept_kw("OR")) l = binary("OR", std::move(l), and_expr());
    return l;
  }

  ExprPtr and_expr() {
    auto l = not_expr();
    while (accept_kw("AND")) l = binary("AND", std::move(l), not_expr());
    return l;
  }

  ExprPtr not_expr() {
    if (cur().is_keyword("NOT")) {
      const std::size_t begin = cur().span.begin;
      advance();
      auto inner = not_expr();
      auto e = make_expr(ExprKind::unary, {begin, inner->span.end});
      e->op = "NOT";
      e->args.push_back(std::move(inner));
      return e;
    }
    return equality();
  }

  ExprPtr equality() {
    auto l = comparison();
    while (true) {
      const std::size_t begin = l->span.begin;
      if (cur().is_punct("=") || cur().is_punct("==") || cur().is_punct("!=") || cur().is_punct("<>")) {
        std::string op = cur().text;
        advance();
        l = binary(op, std::move(l), comparison());
        continue;
      }
      if (accept_kw("IS")) {
        std::string op = "IS";
        if (accept_kw("NOT")) op += " NOT";
        if (accept_kw("DISTINCT")) {
          expect_kw("FROM");
          op += " DISTINCT FROM";
        }
        l = binary(op, std::move(l), comparison());
        continue;
      }
      if (accept_kw("ISNULL") || accept_kw("NOTNULL")) {
        auto e = make_expr(ExprKind::unary, span_from(begin));
        e->op = fold(prev().text);
        e->args.push_back(std::move(l));
        l = std::move(e);
        continue;
      }
      bool negated = false;
      if (cur().is_keyword("NOT")) {
        const Token& nx = peek(1);
        if (nx.is_keyword("NULL")) {
          advance();
          advance();
          auto e = make_expr(ExprKind::unary, span_from(begin));
          e->op = "notnull";
          e->args.push_back(std::move(l));
          l = std::move(e);
          continue;
        }
        if (nx.is_keyword("IN") || nx.is_keyword("LIKE") || nx.is_keyword("GLOB") || nx.is_keyword("REGEXP") ||
            nx.is_keyword("MATCH") || nx.is_keyword("BETWEEN")) {
          advance();
          negated = true;
        } else {
          break;
        }
      }
      if (accept_kw("IN")) {
        l = in_rest(std::move(l), negated);
        continue;
      }
      if (cur().is_keyword("LIKE") || cur().is_keyword("GLOB") || cur().is_keyword("REGEXP") ||
          cur().is_keyword("MATCH")) {
        std::string op = fold(cur().text);
        advance();
        auto r = comparison();
        auto e = make_expr(ExprKind::binary, {begin, r->span.end});
        e->op = op;
        e->negated = negated;
        e->args.push_back(std::move(l));
        e->args.push_back(std::move(r));
        if (accept_kw("ESCAPE")) {
          e->args.push_back(comparison());
          e->span.end = prev().span.end;
        }
        l = std::move(e);
        continue;
      }
      if (accept_kw("BETWEEN")) {
        auto lo = comparison();
        expect_kw("AND");
        auto hi = comparison();
        auto e = make_expr(ExprKind::between, {begin, hi->span.end});
        e->negated = negated;
        e->args.push_back(std::move(l));
        e->args.push_back(std::move(lo));
        e->args.push_back(std::move(hi));
        l = std::move(e);
        continue;
      }
      break;
    }
    return l;
  }

  ExprPtr in_rest(ExprPtr l, bool negated) {
    const std::size_t begin = l->span.begin;
    if (accept_punct("(")) {
      if (starts_select()) {
        auto e = make_expr(ExprKind::in_select, {});
        e->negated = negated;
        e->args.push_back(std::move(l));
        e->subquery = select();
        expect_punct(")");
        e->span = span_from(begin);
        return e;
      }
      auto e = make_expr(ExprKind::in_list, {});
      e->negated = negated;
      e->args.push_back(std::move(l));
      if (!cur().is_punct(")")) {
        do {
          e->args.push_back(expr());
        } while (accept_punct(","));
      }
      expect_punct(")");
      e->span = span_from(begin);
      return e;
    }
    auto e = make_expr(ExprKind::in_table, {});
    e->negated = negated;
    e->args.push_back(std::move(l));
    e->name = name("table name");
    if (accept_punct(".")) e->name = name("table name");
    if (accept_punct("(")) {
      if (!cur().is_punct(")")) {
        do {
          e->args.push_back(expr());
        } while (accept_punct(","));
      }
      expect_punct(")");
    }
    e->span = span_from(begin);
    return e;
  }

  ExprPtr comparison() {
    auto l = bitwise();
    while (cur().is_punct("<") || cur().is_punct("<=") || cur().is_punct(">") || cur().is_punct(">=")) {
      std::string op = cur().text;
      advance();
      l = binary(op, std::move(l), bitwise());
    }
    return l;
  }

  ExprPtr bitwise() {
    auto l = additive();
    while (cur().is_punct("&") || cur().is_punct("|") || cur().is_punct("<<") || cur().is_punct(">>")) {
      std::string op = cur().text;
      advance();
      l = binary(op, std::move(l), additive());
    }
    return l;
  }

  ExprPtr additive() {
    auto l = multiplicative();
    while (cur().is_punct("+") || cur().is_punct("-")) {
      std::string op = cur().text;
      advance();
      l = binary(op, std::move(l), multiplicative());
    }
    return l;
  }

  ExprPtr multiplicative() {
    auto l = concat();
    while (cur().is_punct("*") || cur().is_punct("/") || cur().is_punct("%")) {
      std::string op = cur().text;
      advance();
      l = binary(op, std::move(l), concat());
    }
    return l;
  }

  ExprPtr concat() {
    auto l = unary();
    while (cur().is_punct("||") || cur().is_punct("->") || cur().is_punct("->>")) {
      std::string op = cur().text;
      advance();
      l = binary(op, std::move(l), unary());
    }
    return l;
  }

  ExprPtr unary() {
    if (cur().is_punct("-") || cur().is_punct("+") || cur().is_punct("~")) {
      const std::size_t begin = cur().span.begin;
      std::string op = cur().text;
      advance();
      auto inner = unary();
      auto e = make_expr(ExprKind::unary, {begin, inner->span.end});
      e->op = op;
      e->args.push_back(std::move(inner));
      return e;
    }
    auto p = primary();
    while (accept_kw("COLLATE")) {
      auto e = make_expr(ExprKind::collate, {});
      e->op = name("collation");
      e->span = {p->span.begin, prev().span.end};
      e->args.push_back(std::move(p));
      p = std::move(e);
    }
    return p;
  }

  ExprPtr primary() {
    const Token& t = cur();
    const std::size_t begin = t.span.begin;
    switch (t.kind) {
      case TokenKind::number:
      case TokenKind::string:
      case TokenKind::blob:
      case TokenKind::parameter: {
        auto e = make_expr(ExprKind::literal, t.span);
        e->op = t.text;
        advance();
        return e;
      }
      case TokenKind::end:
        fail("unexpected end of input in expression");
      default:
        break;
    }
    if (t.is_keyword("NULL") || t.is_keyword("CURRENT_DATE") || t.is_keyword("CURRENT_TIME") ||
        t.is_keyword("CURRENT_TIMESTAMP") || t.is_keyword("TRUE") || t.is_keyword("FALSE")) {
      auto e = make_expr(ExprKind::literal, t.span);
      e->op = t.text;
      advance();
      return e;
    }
    if (accept_punct("(")) {
      if (starts_select()) {
        auto e = make_expr(ExprKind::subquery, {});
        e->subquery = select();
        expect_punct(")");
        e->span = span_from(begin);
        return e;
      }
      std::vector<ExprPtr> items;
      do {
        items.push_back(expr());
      } while (accept_punct(","));
      expect_punct(")");
      if (items.size() == 1) {
        auto inner = std::move(items.front());
        inner->span = span_from(begin);
        return inner;
      }
      auto e = make_expr(ExprKind::row, span_from(begin));
      e->args = std::move(items);
      return e;
    }
    if (accept_kw("CASE")) {
      auto e = make_expr(ExprKind::case_when, {});
      if (!cur().is_keyword("WHEN")) {
        e->has_case_operand = true;
        e->args.push_back(expr());
      }
      if (!cur().is_keyword("WHEN")) fail("expected WHEN");
      while (accept_kw("WHEN")) {
        e->args.push_back(expr());
        expect_kw("THEN");
        e->args.push_back(expr());
      }
      if (accept_kw("ELSE")) {
        e->has_else = true;
        e->args.push_back(expr());
      }
      expect_kw("END");
      e->span = span_from(begin);
      return e;
    }
    if (accept_kw("CAST")) {
      auto e = make_expr(ExprKind::cast, {});
      expect_punct("(");
      e->args.push_back(expr());
      expect_kw("AS");
      e->op = type_name();
      expect_punct(")");
      e->span = span_from(begin);
      return e;
    }
    if (accept_kw("EXISTS")) {
      auto e = make_expr(ExprKind::exists, {});
      expect_punct("(");
      e->subquery = select();
      expect_punct(")");
      e->span = span_from(begin);
      return e;
    }
    if (accept_kw("RAISE")) {
      auto e = make_expr(ExprKind::raise, {});
      expect_punct("(");
      int depth = 0;
      while (!(depth == 0 && cur().is_punct(")"))) {
        if (cur().kind == TokenKind::end) fail("unterminated RAISE");
        if (cur().is_punct("(")) ++depth;
        if (cur().is_punct(")")) --depth;
        advance();
      }
      expect_punct(")");
      e->span = span_from(begin);
      return e;
    }
    if (t.is_word() && peek(1).is_punct("(") && t.kind == TokenKind::identifier) {
      return function_call();
    }
    if (t.kind == TokenKind::quoted_identifier || (t.kind == TokenKind::identifier && !is_reserved(t))) {
      auto e = make_expr(ExprKind::column, {});
      e->quoted = t.kind == TokenKind::quoted_identifier;
      e->name = t.value;
      advance();
      if (cur().is_punct(".") && peek(1).is_word()) {
        advance();
        e->qualifier = e->name;
        e->name = cur().value;
        e->quoted = cur().kind == TokenKind::quoted_identifier;
        advance();
        if (cur().is_punct(".") && peek(1).is_word()) {  // schema.table.column
          advance();
          e->qualifier = e->name;
          e->name = cur().value;
          e->quoted = cur().kind == TokenKind::quoted_identifier;
          advance();
        }
      }
      e->span = span_from(begin);
      return e;
    }
    fail("expected expression");
  }

  ExprPtr function_call() {
    const std::size_t begin = cur().span.begin;
    auto e = make_expr(ExprKind::function, {});
    e->op = cur().value;
    advance();
    expect_punct("(");
    if (accept_kw("DISTINCT")) e->distinct = true;
    if (cur().is_punct("*")) {
      e->args.push_back(make_expr(ExprKind::star, cur().span));
      advance();
    } else if (!cur().is_punct(")")) {
      do {
        e->args.push_back(expr());
      } while (accept_punct(","));
      if (accept_kw("ORDER")) {  // ordered-set aggregates, e.g. group_concat(x ORDER BY y)
        expect_kw("BY");
        for (auto& term : order_terms()) e->args.push_back(std::move(term.expr));
      }
    }
    expect_punct(")");
    if (accept_kw("FILTER")) {
      expect_punct("(");
      expect_kw("WHERE");
      e->filter = expr();
      expect_punct(")");
    }
    if (accept_kw("OVER")) {
      if (cur().is_punct("(")) e->over = window_spec();
      else e->over_name = name("window name");
    }
    e->span = span_from(begin);
    return e;
  }

  std::string type_name() {
    const std::size_t begin = cur().span.begin;
    bool any = false;
    while (cur().kind == TokenKind::identifier && !is_reserved(cur()) && !is_column_constraint_start(cur())) {
      advance();
      any = true;
    }
    if (!any) fail("expected type name");
    if (accept_punct("(")) {
      accept_punct("+") || accept_punct("-");
      if (cur().kind != TokenKind::number) fail("expected type size");
      advance();
      if (accept_punct(",")) {
        accept_punct("+") || accept_punct("-");
        if (cur().kind != TokenKind::number) fail("expected type size");
        advance();
      }
      expect_punct(")");
    }
    return std::string(sql_.substr(begin, prev().span.end - begin));
  }

  // ---- CREATE TABLE --------------------------------------------------------

  bool starts_table_constraint() const {
    return cur().is_keyword("CONSTRAINT") || cur().is_keyword("PRIMARY") || cur().is_keyword("UNIQUE") ||
           cur().is_keyword("CHECK") || cur().is_keyword("FOREIGN");
  }

  static bool is_column_constraint_start(const Token& t) {
    for (const char* kw : {"CONSTRAINT", "PRIMARY", "NOT", "NULL", "UNIQUE", "CHECK", "DEFAULT", "COLLATE",
                           "REFERENCES", "GENERATED", "AS"})
      if (t.is_keyword(kw)) return true;
    return false;
  }

  void skip_parenthesized() {
    expect_punct("(");
    int depth = 0;
    while (!(depth == 0 && cur().is_punct(")"))) {
      if (cur().kind == TokenKind::end) fail("unbalanced parentheses");
      if (cur().is_punct("(")) ++depth;
      if (cur().is_punct(")")) --depth;
      advance();
    }
    expect_punct(")");
  }

  void conflict_clause() {
    if (cur().is_keyword("ON") && peek(1).is_keyword("CONFLICT")) {
      advance();
      advance();
      name("conflict resolution");
    }
  }

  std::vector<std::string> indexed_columns() {
    std::vector<std::string> cols;
    expect_punct("(");
    do {
      cols.push_back(name("column name"));
      if (accept_kw("COLLATE")) name("collation");
      accept_kw("ASC") || accept_kw("DESC");
    } while (accept_punct(","));
    expect_punct(")");
    return cols;
  }

  std::pair<std::string, std::vector<std::string>> references_clause() {
    std::pair<std::string, std::vector<std::string>> ref;
    ref.first = name("referenced table");
    if (cur().is_punct("(")) {
      expect_punct("(");
      do {
        ref.second.push_back(name("referenced column"));
      } while (accept_punct(","));
      expect_punct(")");
    }
    while (true) {
      if (cur().is_keyword("ON") && (peek(1).is_keyword("DELETE") || peek(1).is_keyword("UPDATE"))) {
        advance();
        advance();
        if (accept_kw("SET")) {
          if (!accept_kw("NULL")) expect_kw("DEFAULT");
        } else if (accept_kw("NO")) {
          expect_kw("ACTION");
        } else if (!accept_kw("CASCADE") && !accept_kw("RESTRICT")) {
          fail("expected foreign key action");
        }
      } else if (accept_kw("MATCH")) {
        name("match type");
      } else if (cur().is_keyword("DEFERRABLE") ||
                 (cur().is_keyword("NOT") && peek(1).is_keyword("DEFERRABLE"))) {
        accept_kw("NOT");
        advance();
        if (accept_kw("INITIALLY")) {
          if (!accept_kw("DEFERRED")) expect_kw("IMMEDIATE");
        }
      } else {
        break;
      }
    }
    return ref;
  }

  ColumnDefAst column_def() {
    ColumnDefAst col;
    col.name = name("column name");
    if (cur().kind == TokenKind::identifier && !is_column_constraint_start(cur()) && !is_reserved(cur())) {
      col.type_text = type_name();
    }
    while (true) {
      if (accept_kw("CONSTRAINT")) {
        name("constraint name");
        continue;
      }
      if (accept_kw("PRIMARY")) {
        expect_kw("KEY");
        col.primary_key = true;
        accept_kw("ASC") || accept_kw("DESC");
        conflict_clause();
        accept_kw("AUTOINCREMENT");
        continue;
      }
      if (accept_kw("NOT")) {
        expect_kw("NULL");
        conflict_clause();
        continue;
      }
      if (accept_kw("NULL")) continue;
      if (accept_kw("UNIQUE")) {
        conflict_clause();
        continue;
      }
      if (accept_kw("CHECK")) {
        skip_parenthesized();
        continue;
      }
      if (accept_kw("DEFAULT")) {
        if (cur().is_punct("(")) {
          skip_parenthesized();
        } else {
          accept_punct("+") || accept_punct("-");
          if (cur().kind == TokenKind::end || cur().kind == TokenKind::punct) fail("expected default value");
          advance();
        }
        continue;
      }
      if (accept_kw("COLLATE")) {
        name("collation");
        continue;
      }
      if (accept_kw("REFERENCES")) {
        col.references = references_clause();
        continue;
      }
      if (accept_kw("GENERATED")) {
        expect_kw("ALWAYS");
        expect_kw("AS");
        skip_parenthesized();
        accept_kw("STORED") || accept_kw("VIRTUAL");
        continue;
      }
      if (accept_kw("AS")) {
        skip_parenthesized();
        accept_kw("STORED") || accept_kw("VIRTUAL");
        continue;
      }
      break;
    }
    if (!cur().is_punct(",") && !cur().is_punct(")")) fail("unexpected token in column definition");
    return col;
  }

  void table_constraint(CreateTable& t) {
    if (accept_kw("CONSTRAINT")) name("constraint name");
    if (accept_kw("PRIMARY")) {
      expect_kw("KEY");
      t.primary_key = indexed_columns();
      conflict_clause();
    } else if (accept_kw("UNIQUE")) {
      indexed_columns();
      conflict_clause();
    } else if (accept_kw("CHECK")) {
      skip_parenthesized();
    } else if (accept_kw("FOREIGN")) {
      expect_kw("KEY");
      ForeignKeyAst fk;
      expect_punct("(");
      do {
        fk.columns.push_back(name("column name"));
      } while (accept_punct(","));
      expect_punct(")");
      expect_kw("REFERENCES");
      auto ref = references_clause();
      fk.table = std::move(ref.first);
      fk.ref_columns = std::move(ref.second);
      t.foreign_keys.push_back(std::move(fk));
    } else {
      fail("expected table constraint");
    }
  }

  std::string_view sql_;
  std::size_t stmt_;
  std::vector<Token> toks_;
  std::vector<Comment> comments_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<StatementText> split_statements(std::string_view script) {
  const auto lexed = tokenize(script);
  std::vector<StatementText> out;
  std::size_t frag_begin = 0;
  bool has_tokens = false;
  auto flush = [&](std::size_t frag_end) {
    if (has_tokens) {
      std::string_view frag = script.substr(frag_begin, frag_end - frag_begin);
      std::size_t lead = 0;
      while (lead < frag.size() && std::isspace(static_cast<unsigned char>(frag[lead]))) ++lead;
      out.push_back({trim_copy(frag), frag_begin + lead});
    }
    has_tokens = false;
  };
  for (const auto& tok : lexed.tokens) {
    if (tok.kind == TokenKind::end) {
      flush(script.size());
      break;
    }
    if (tok.is_punct(";")) {
      flush(tok.span.begin);
      frag_begin = tok.span.end;
      continue;
    }
    has_tokens = true;
  }
  return out;
}

StatementKind classify_statement(std::string_view statement) {
  LexResult lexed;
  try {
    lexed = tokenize(statement);
  } catch (const ParseError&) {
    return StatementKind::other;
  }
  const auto& toks = lexed.tokens;
  std::size_t i = 0;
  if (toks[i].is_keyword("CREATE")) {
    ++i;
    if (toks[i].is_keyword("TEMP") || toks[i].is_keyword("TEMPORARY")) ++i;
    if (toks[i].is_keyword("VIEW")) return StatementKind::create_view;
    if (toks[i].is_keyword("TABLE")) return StatementKind::create_table;
    return StatementKind::other;
  }
  if (toks[i].is_keyword("SELECT") || toks[i].is_keyword("WITH") || toks[i].is_keyword("VALUES")) {
    return StatementKind::query;
  }
  return StatementKind::other;
}

SelectPtr parse_select(std::string_view sql, std::size_t statement_index) {
  return Parser(sql, statement_index).select_statement();
}

CreateView parse_create_view(std::string_view sql, std::size_t statement_index) {
  return Parser(sql, statement_index).create_view();
}

CreateTable parse_create_table(std::string_view sql, std::size_t statement_index) {
  return Parser(sql, statement_index).create_table();
}

}  // namespace semlayer::sql
