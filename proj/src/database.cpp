#include "semlayer/database.hpp"

#include <sqlite3.h>

#include <cctype>
#include <utility>

#include "semlayer/errors.hpp"
#include "semlayer/identifiers.hpp"

namespace semlayer {

namespace {

struct StmtDeleter {
  void operator()(sqlite3_stmt* s) const noexcept { sqlite3_finalize(s); }
};
using StmtPtr = std::unique_ptr<sqlite3_stmt, StmtDeleter>;

std::string errmsg(sqlite3* db) { return db ? sqlite3_errmsg(db) : "out of memory"; }

StmtPtr prepare(sqlite3* db, std::string_view sql, std::string_view* tail = nullptr) {
  sqlite3_stmt* raw = nullptr;
  const char* rest = nullptr;
  const int rc = sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &raw, &rest);
  StmtPtr stmt(raw);
  if (rc != SQLITE_OK) throw DatabaseError(errmsg(db));
  if (tail) *tail = sql.substr(static_cast<std::size_t>(rest - sql.data()));
  return stmt;
}

}  // namespace

Database Database::open(const std::filesystem::path& path) {
  sqlite3* raw = nullptr;
  const int rc = sqlite3_open_v2(path.string().c_str(), &raw, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = errmsg(raw);
    sqlite3_close(raw);
    throw DatabaseError("cannot open database " + path.string() + ": " + msg);
  }
  Database db(raw);
  db.exec("PRAGMA foreign_keys = OFF");
  return db;
}

Database Database::open_readonly(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DatabaseError("database not found: " + path.string());
  sqlite3* raw = nullptr;
  const int rc = sqlite3_open_v2(path.string().c_str(), &raw, SQLITE_OPEN_READONLY, nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = errmsg(raw);
    sqlite3_close(raw);
    throw DatabaseError("cannot open database " + path.string() + ": " + msg);
  }
  return Database(raw);
}

Database Database::in_memory() { return open(":memory:"); }

Database::Database(Database&& other) noexcept : db_(std::exchange(other.db_, nullptr)) {}

Database& Database::operator=(Database&& other) noexcept {
  if (this != &other) {
    if (db_) sqlite3_close(db_);
    db_ = std::exchange(other.db_, nullptr);
  }
  return *this;
}

Database::~Database() {
  if (db_) sqlite3_close(db_);
}

void Database::exec(std::string_view sql) {
  std::string text(sql);
  char* err = nullptr;
  if (sqlite3_exec(db_, text.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : errmsg(db_);
    sqlite3_free(err);
    throw DatabaseError(msg);
  }
}

ResultSet Database::query(std::string_view sql, std::size_t max_rows) {
  auto stmt = prepare(db_, sql);
  ResultSet out;
  if (!stmt) return out;
  const int ncol = sqlite3_column_count(stmt.get());
  for (int i = 0; i < ncol; ++i) out.columns.emplace_back(sqlite3_column_name(stmt.get(), i));
  while (out.rows.size() < max_rows) {
    const int rc = sqlite3_step(stmt.get());
    if (rc == SQLITE_DONE) break;
    if (rc != SQLITE_ROW) throw DatabaseError(errmsg(db_));
    Row row;
    row.reserve(static_cast<std::size_t>(ncol));
    for (int i = 0; i < ncol; ++i) {
      if (sqlite3_column_type(stmt.get(), i) == SQLITE_NULL) {
        row.emplace_back(std::nullopt);
      } else {
        const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), i));
        row.emplace_back(std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(stmt.get(), i))));
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

bool Database::is_read_only(std::string_view sql) {
  std::string_view tail;
  auto stmt = prepare(db_, sql, &tail);
  if (!stmt) return false;
  for (char c : tail) {
    if (c != ';' && !std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return sqlite3_stmt_readonly(stmt.get()) != 0;
}

void Database::insert_rows(std::string_view table, const std::vector<Row>& rows) {
  if (rows.empty()) return;
  const std::size_t width = rows.front().size();
  std::string sql = "INSERT INTO " + quote_identifier(table) + " VALUES (";
  for (std::size_t i = 0; i < width; ++i) sql += i ? ", ?" : "?";
  sql += ")";
  auto stmt = prepare(db_, sql);
  for (const auto& row : rows) {
    if (row.size() != width) throw DatabaseError("row width mismatch inserting into " + std::string(table));
    sqlite3_reset(stmt.get());
    for (std::size_t i = 0; i < width; ++i) {
      const int idx = static_cast<int>(i + 1);
      if (row[i]) {
        sqlite3_bind_text(stmt.get(), idx, row[i]->data(), static_cast<int>(row[i]->size()), SQLITE_TRANSIENT);
      } else {
        sqlite3_bind_null(stmt.get(), idx);
      }
    }
    if (sqlite3_step(stmt.get()) != SQLITE_DONE) throw DatabaseError(errmsg(db_));
  }
}

void Database::copy_to(Database& target) {
  sqlite3_backup* backup = sqlite3_backup_init(target.db_, "main", db_, "main");
  if (!backup) throw DatabaseError(errmsg(target.db_));
  sqlite3_backup_step(backup, -1);
  if (sqlite3_backup_finish(backup) != SQLITE_OK) throw DatabaseError(errmsg(target.db_));
}

bool Database::object_exists(std::string_view name, std::string_view type) {
  auto rs = query("SELECT 1 FROM sqlite_master WHERE type = " + quote_literal(type) +
                  " AND name = " + quote_literal(name) + " COLLATE NOCASE");
  return !rs.rows.empty();
}

Savepoint::Savepoint(Database& db, std::string name) : db_(db), name_(std::move(name)) {
  db_.exec("SAVEPOINT " + quote_identifier(name_));
}

Savepoint::~Savepoint() {
  if (open_) {
    try {
      rollback();
    } catch (...) {
    }
  }
}

void Savepoint::release() {
  if (!open_) return;
  open_ = false;
  db_.exec("RELEASE " + quote_identifier(name_));
}

void Savepoint::rollback() {
  if (!open_) return;
  open_ = false;
  db_.exec("ROLLBACK TO " + quote_identifier(name_));
  db_.exec("RELEASE " + quote_identifier(name_));
}

}  // namespace semlayer
