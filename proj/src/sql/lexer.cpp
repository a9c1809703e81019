#include "semlayer/sql/lexer.hpp"

#include <cctype>

#include "semlayer/errors.hpp"
#include "semlayer/identifiers.hpp"

namespace semlayer::sql {

bool Token::is_keyword(std::string_view kw) const {
  return kind == TokenKind::identifier && iequals(text, kw);
}

namespace {

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

class Lexer {
 public:
  Lexer(std::string_view sql, std::size_t stmt) : sql_(sql), stmt_(stmt) {}

  LexResult run() {
    LexResult out;
    while (true) {
      skip_space();
      if (pos_ >= sql_.size()) break;
      const char c = sql_[pos_];
      if (c == '-' && peek(1) == '-') {
        out.comments.push_back(line_comment());
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        out.comments.push_back(block_comment());
        continue;
      }
      out.tokens.push_back(next_token());
      if (out.tokens.back().is_punct(";")) ++semicolons_;
    }
    Token end;
    end.kind = TokenKind::end;
    end.span = {sql_.size(), sql_.size()};
    end.line = line_;
    out.tokens.push_back(std::move(end));
    return out;
  }

 private:
  char peek(std::size_t ahead) const { return pos_ + ahead < sql_.size() ? sql_[pos_ + ahead] : '\0'; }

  void advance() {
    if (sql_[pos_] == '\n') ++line_;
    ++pos_;
  }

  void skip_space() {
    while (pos_ < sql_.size() && std::isspace(static_cast<unsigned char>(sql_[pos_]))) advance();
  }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    const std::string tok(sql_.substr(at, std::min<std::size_t>(16, sql_.size() - at)));
    throw ParseError(what + " at offset " + std::to_string(at), stmt_ + semicolons_, at, tok);
  }

  Comment line_comment() {
    Comment c;
    c.line = line_;
    c.span.begin = pos_;
    pos_ += 2;
    const std::size_t start = pos_;
    while (pos_ < sql_.size() && sql_[pos_] != '\n') ++pos_;
    c.span.end = pos_;
    c.text = trim(sql_.substr(start, pos_ - start));
    return c;
  }

  Comment block_comment() {
    Comment c;
    c.line = line_;
    c.line_comment = false;
    c.span.begin = pos_;
    pos_ += 2;
    const std::size_t start = pos_;
    while (pos_ < sql_.size() && !(sql_[pos_] == '*' && peek(1) == '/')) advance();
    const std::size_t stop = pos_;
    if (pos_ < sql_.size()) pos_ += 2;  // unterminated block comments run to end of input, as in SQLite
    c.span.end = pos_;
    c.text = trim(sql_.substr(start, stop - start));
    return c;
  }

  Token quoted(TokenKind kind, char close) {
    Token t;
    t.kind = kind;
    t.line = line_;
    t.span.begin = pos_;
    advance();
    while (true) {
      if (pos_ >= sql_.size()) fail("unterminated quoted text", t.span.begin);
      const char c = sql_[pos_];
      if (c == close) {
        if (close != ']' && peek(1) == close) {
          t.value += close;
          advance();
          advance();
          continue;
        }
        advance();
        break;
      }
      t.value += c;
      advance();
    }
    t.span.end = pos_;
    t.text = std::string(sql_.substr(t.span.begin, pos_ - t.span.begin));
    return t;
  }

  Token next_token() {
    const std::size_t start = pos_;
    const auto c = static_cast<unsigned char>(sql_[pos_]);
    Token t;
    t.line = line_;
    t.span.begin = start;

    if ((c == 'x' || c == 'X') && peek(1) == '\'') {
      ++pos_;
      Token s = quoted(TokenKind::string, '\'');
      t.kind = TokenKind::blob;
      t.value = s.value;
    } else if (ident_start(c)) {
      while (pos_ < sql_.size() && ident_char(static_cast<unsigned char>(sql_[pos_]))) ++pos_;
      t.kind = TokenKind::identifier;
    } else if (c == '\'') {
      return quoted(TokenKind::string, '\'');
    } else if (c == '"') {
      return quoted(TokenKind::quoted_identifier, '"');
    } else if (c == '`') {
      return quoted(TokenKind::quoted_identifier, '`');
    } else if (c == '[') {
      return quoted(TokenKind::quoted_identifier, ']');
    } else if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      t.kind = TokenKind::number;
      if (c == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
        pos_ += 2;
        while (pos_ < sql_.size() && std::isxdigit(static_cast<unsigned char>(sql_[pos_]))) ++pos_;
      } else {
        while (pos_ < sql_.size() && (std::isdigit(static_cast<unsigned char>(sql_[pos_])) || sql_[pos_] == '_')) ++pos_;
        if (pos_ < sql_.size() && sql_[pos_] == '.') {
          ++pos_;
          while (pos_ < sql_.size() && std::isdigit(static_cast<unsigned char>(sql_[pos_]))) ++pos_;
        }
        if (pos_ < sql_.size() && (sql_[pos_] == 'e' || sql_[pos_] == 'E')) {
          std::size_t p = pos_ + 1;
          if (p < sql_.size() && (sql_[p] == '+' || sql_[p] == '-')) ++p;
          if (p < sql_.size() && std::isdigit(static_cast<unsigned char>(sql_[p]))) {
            pos_ = p;
            while (pos_ < sql_.size() && std::isdigit(static_cast<unsigned char>(sql_[pos_]))) ++pos_;
          }
        }
      }
    } else if (c == '?' || c == ':' || c == '@' || c == '$') {
      t.kind = TokenKind::parameter;
      ++pos_;
      while (pos_ < sql_.size() && ident_char(static_cast<unsigned char>(sql_[pos_]))) ++pos_;
    } else {
      t.kind = TokenKind::punct;
      static constexpr std::string_view three[] = {"->>"};
      static constexpr std::string_view two[] = {"||", "<=", ">=", "<>", "!=", "==", "<<", ">>", "->"};
      const std::string_view rest = sql_.substr(pos_);
      std::size_t len = 0;
      for (auto op : three)
        if (rest.starts_with(op)) len = op.size();
      if (len == 0)
        for (auto op : two)
          if (rest.starts_with(op)) len = op.size();
      if (len == 0) {
        static constexpr std::string_view single = "(),;.=<>+-*/%&|~";
        if (single.find(static_cast<char>(c)) == std::string_view::npos) fail("unexpected character", start);
        len = 1;
      }
      pos_ += len;
    }
    t.span.end = pos_;
    t.text = std::string(sql_.substr(start, pos_ - start));
    if (t.kind == TokenKind::identifier) t.value = t.text;
    return t;
  }

  std::string_view sql_;
  std::size_t stmt_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t semicolons_ = 0;
};

}  // namespace

LexResult tokenize(std::string_view sql, std::size_t statement_index) {
  return Lexer(sql, statement_index).run();
}

}  // namespace semlayer::sql
