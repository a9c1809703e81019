#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace semlayer::sql {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
};

enum class TokenKind {
  identifier,         // bare word, keywords included
  quoted_identifier,  // "x", `x`, [x]
  string,             // 'x'
  number,
  blob,       // X'..'
  parameter,  // ?, ?1, :x, @x, $x
  punct,      // operators and punctuation
  end,
};

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;   // raw source text
  std::string value;  // unquoted for identifiers and strings
  Span span;
  std::size_t line = 1;

  bool is_word() const { return kind == TokenKind::identifier || kind == TokenKind::quoted_identifier; }
  /// Case-insensitive match against a bare keyword.
  bool is_keyword(std::string_view kw) const;
  bool is_punct(std::string_view p) const { return kind == TokenKind::punct && text == p; }
};

struct Comment {
  std::string text;  // without the comment markers, trimmed
  Span span;
  std::size_t line = 1;
  bool line_comment = true;
};

struct LexResult {
  std::vector<Token> tokens;  // always terminated by an `end` token
  std::vector<Comment> comments;
};

/// Tokenizes SQLite-dialect SQL. Throws ParseError on unterminated literals
/// or characters outside the dialect.
LexResult tokenize(std::string_view sql, std::size_t statement_index = 0);

}  // namespace semlayer::sql
