#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semlayer/sql/lexer.hpp"

namespace semlayer::sql {

struct Expr;
struct Select;
using ExprPtr = std::unique_ptr<Expr>;
using SelectPtr = std::unique_ptr<Select>;

enum class ExprKind {
  literal,
  column,
  star,  // the `*` argument of count(*)
  unary,
  binary,
  function,
  case_when,  // args: [operand?] (when, then)* [else?]; see Expr::has_case_operand / has_else
  cast,
  in_list,    // args[0] IN (args[1..])
  in_select,  // args[0] IN (subquery)
  in_table,   // args[0] IN table_name
  exists,
  subquery,   // scalar subquery
  between,
  row,        // (a, b, ...)
  collate,
  raise,
};

struct OrderTerm {
  ExprPtr expr;
  bool descending = false;
};

struct WindowSpec {
  std::string base;
  std::vector<ExprPtr> partition;
  std::vector<OrderTerm> order;
};

struct Expr {
  ExprKind kind = ExprKind::literal;
  Span span;
  std::string op;         // operator, function name, literal text, type name, collation
  std::string qualifier;  // column: table or alias qualifier, empty when bare
  std::string name;       // column name
  bool quoted = false;    // column written as a double-quoted identifier
  bool distinct = false;
  bool negated = false;   // NOT IN / NOT BETWEEN / NOT EXISTS
  bool has_case_operand = false;
  bool has_else = false;
  std::vector<ExprPtr> args;
  SelectPtr subquery;
  ExprPtr filter;
  std::optional<WindowSpec> over;
  std::string over_name;
};

struct ResultColumn {
  enum class Kind { expr, star, table_star };
  Kind kind = Kind::expr;
  ExprPtr expr;
  std::string table;  // table_star qualifier
  std::string alias;
  Span span;  // source text of the expression (without alias)
};

enum class JoinOp { none, comma, inner, left, right, full, cross };

struct JoinItem;

struct TableRef {
  enum class Kind { table, subquery, join_group, table_function };
  Kind kind = Kind::table;
  std::string schema;
  std::string name;
  Span name_span;
  std::string alias;
  SelectPtr subquery;
  std::vector<JoinItem> group;
  std::vector<ExprPtr> function_args;
};

struct JoinItem {
  JoinOp op = JoinOp::none;
  bool natural = false;
  TableRef ref;
  ExprPtr on;
  std::vector<std::string> using_columns;
};

struct SelectCore {
  bool distinct = false;
  bool is_values = false;
  std::vector<ResultColumn> columns;
  std::vector<std::vector<ExprPtr>> values;
  std::vector<JoinItem> from;
  ExprPtr where;
  std::vector<ExprPtr> group_by;
  ExprPtr having;
  std::vector<std::pair<std::string, WindowSpec>> windows;
};

struct Cte {
  std::string name;
  std::vector<std::string> columns;
  SelectPtr select;
};

struct Select {
  bool recursive = false;
  std::vector<Cte> ctes;
  std::vector<SelectCore> cores;
  std::vector<std::string> compound_ops;  // size = cores.size() - 1
  std::vector<OrderTerm> order_by;
  ExprPtr limit;
  ExprPtr offset;
};

struct CreateView {
  bool temporary = false;
  bool if_not_exists = false;
  std::string schema;
  std::string name;
  Span name_span;
  std::vector<std::string> columns;
  SelectPtr select;
  Span select_span;
};

struct ColumnDefAst {
  std::string name;
  std::string type_text;
  std::string description;
  bool primary_key = false;
  std::optional<std::pair<std::string, std::vector<std::string>>> references;
};

struct ForeignKeyAst {
  std::vector<std::string> columns;
  std::string table;
  std::vector<std::string> ref_columns;  // empty means "the parent's primary key"
};

struct CreateTable {
  std::string schema;
  std::string name;
  bool if_not_exists = false;
  std::vector<ColumnDefAst> columns;
  std::vector<std::string> primary_key;  // table-level constraint
  std::vector<ForeignKeyAst> foreign_keys;
};

}  // namespace semlayer::sql
