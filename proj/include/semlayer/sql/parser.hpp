#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "semlayer/sql/ast.hpp"

namespace semlayer::sql {

/// One top-level statement of a script: the source text between semicolons,
/// leading comments included, trailing semicolon excluded, outer whitespace trimmed.
struct StatementText {
  std::string text;
  std::size_t offset = 0;  // byte offset of `text` within the script
};

/// Splits on top-level semicolons. Comment-only fragments are dropped.
std::vector<StatementText> split_statements(std::string_view script);

enum class StatementKind { create_view, create_table, query, other };

StatementKind classify_statement(std::string_view statement);

/// Parses exactly one SELECT/WITH/VALUES statement (an optional trailing ';' is allowed).
SelectPtr parse_select(std::string_view sql, std::size_t statement_index = 0);

CreateView parse_create_view(std::string_view sql, std::size_t statement_index = 0);

/// A comment on the same source line as a column definition becomes that
/// column's description.
CreateTable parse_create_table(std::string_view sql, std::size_t statement_index = 0);

}  // namespace semlayer::sql
