#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semlayer {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the SQL lexer/parser. `statement_index` is the zero-based index
/// of the statement within a script (0 for single statements) and `offset`
/// the byte offset of the offending token in the input text.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t statement_index, std::size_t offset,
             std::string token)
      : Error(message),
        statement_index_(statement_index),
        offset_(offset),
        token_(std::move(token)) {}

  std::size_t statement_index() const noexcept { return statement_index_; }
  std::size_t offset() const noexcept { return offset_; }
  const std::string& token() const noexcept { return token_; }

 private:
  std::size_t statement_index_;
  std::size_t offset_;
  std::string token_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class DatabaseError : public Error {
 public:
  using Error::Error;
};

class LineageError : public Error {
 public:
  using Error::Error;
};

class CatalogError : public Error {
 public:
  using Error::Error;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  using Error::Error;
};

/// Replay transcript asked for a different speaker than the one scripted.
class SpeakerMismatch : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class TranscriptExhausted : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace semlayer
