#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

struct sqlite3;
struct sqlite3_stmt;

namespace semlayer {

using Value = std::optional<std::string>;  // SQL NULL is nullopt; everything else is rendered as text
using Row = std::vector<Value>;

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

/// Owning handle to an SQLite database. Move-only; not safe for concurrent use.
class Database {
 public:
  static Database open(const std::filesystem::path& path);
  static Database open_readonly(const std::filesystem::path& path);
  static Database in_memory();

  Database(Database&&) noexcept;
  Database& operator=(Database&&) noexcept;
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;
  ~Database();

  /// Runs one or more statements; throws DatabaseError with the engine message.
  void exec(std::string_view sql);

  /// Runs a single statement and collects up to `max_rows` rows.
  ResultSet query(std::string_view sql, std::size_t max_rows = SIZE_MAX);

  /// True when `sql` is a single statement that does not write the database.
  bool is_read_only(std::string_view sql);

  /// Inserts rows into `table`, binding values as text (nullopt binds NULL).
  void insert_rows(std::string_view table, const std::vector<Row>& rows);

  /// Copies the whole database into `target` with the online backup API.
  void copy_to(Database& target);

  bool object_exists(std::string_view name, std::string_view type);

  sqlite3* handle() const noexcept { return db_; }

 private:
  explicit Database(sqlite3* db) : db_(db) {}
  sqlite3* db_ = nullptr;
};

/// RAII savepoint: rolls back unless `release()` is called.
class Savepoint {
 public:
  Savepoint(Database& db, std::string name);
  Savepoint(const Savepoint&) = delete;
  Savepoint& operator=(const Savepoint&) = delete;
  ~Savepoint();

  void release();
  void rollback();

 private:
  Database& db_;
  std::string name_;
  bool open_ = true;
};

}  // namespace semlayer
