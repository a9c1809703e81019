#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "semlayer/database.hpp"
#include "semlayer/identifiers.hpp"
#include "semlayer/io.hpp"

namespace semlayer {

inline constexpr std::string_view kSnapshotVersion = "schema_snapshot.v1";
inline constexpr std::size_t kDefaultSampleSize = 5;

struct ColumnDef {
  std::string name;
  std::string type;  // declared type text, preserved verbatim
  std::string description;
  bool primary_key = false;

  friend bool operator==(const ColumnDef&, const ColumnDef&) = default;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;

  std::size_t width() const noexcept { return columns.size(); }
  const ColumnDef* find(std::string_view column) const noexcept;
  std::vector<std::string> primary_key() const;

  friend bool operator==(const TableDef&, const TableDef&) = default;
};

enum class FkProvenance { declared, inferred };

std::string_view to_string(FkProvenance p) noexcept;

/// A single-column foreign key. Composite keys are split into several
/// ForeignKeyDefs that share one `group`.
struct ForeignKeyDef {
  ColumnRef from;
  ColumnRef to;
  FkProvenance provenance = FkProvenance::declared;
  std::size_t group = 0;

  /// "<from_table>.<from_col> references <to_table>.<to_col>"
  std::string describe() const;

  friend bool operator==(const ForeignKeyDef&, const ForeignKeyDef&) = default;
};

using SampleMap = std::map<std::string, std::vector<Row>, ILess>;

/// Immutable description of a relational schema. All constructors validate:
/// unique table names, unique column names per table, width >= 1, FK
/// endpoints resolve and differ, samples name existing tables with matching width.
class SchemaSnapshot {
 public:
  SchemaSnapshot() = default;
  SchemaSnapshot(std::vector<TableDef> tables, std::vector<ForeignKeyDef> foreign_keys, SampleMap samples = {});

  const std::vector<TableDef>& tables() const noexcept { return tables_; }
  const std::vector<ForeignKeyDef>& foreign_keys() const noexcept { return foreign_keys_; }
  const SampleMap& samples() const noexcept { return samples_; }

  const TableDef* find_table(std::string_view name) const noexcept;
  bool has_column(const ColumnRef& ref) const noexcept;
  /// The column reference spelled as declared, or nullopt.
  std::optional<ColumnRef> canonical(const ColumnRef& ref) const;

  std::size_t column_count() const noexcept;
  std::vector<ColumnRef> all_columns() const;

  SchemaSnapshot with_foreign_keys(std::vector<ForeignKeyDef> extra) const;
  SchemaSnapshot with_samples(SampleMap samples) const;

  json to_json() const;
  static SchemaSnapshot from_json(const json& doc);

  friend bool operator==(const SchemaSnapshot& a, const SchemaSnapshot& b) {
    return a.tables_ == b.tables_ && a.foreign_keys_ == b.foreign_keys_ && a.samples_ == b.samples_;
  }

 private:
  std::vector<TableDef> tables_;
  std::vector<ForeignKeyDef> foreign_keys_;
  SampleMap samples_;
  std::map<std::string, std::size_t, ILess> index_;
};

/// Parses a script of CREATE TABLE statements. Throws ParseError (statement
/// index + offending token) or SchemaError (duplicates, unresolved FKs).
SchemaSnapshot ingest_ddl(std::string_view ddl_text);

/// Canonical CREATE TABLE script for `snapshot`; ingest_ddl(render_ddl(s)) == s without samples.
std::string render_ddl(const SchemaSnapshot& snapshot);

/// Creates every table of `snapshot` in `db` and loads its sample rows.
void materialize(const SchemaSnapshot& snapshot, Database& db);

/// Reads base tables (views excluded) and declared FKs from the engine catalog.
SchemaSnapshot introspect_database(Database& db);

struct FkInferenceConfig {
  bool enabled = false;          // pipeline gate; infer_foreign_keys itself always runs
  bool match_primary_key = true;  // same column name, one side a single-column primary key
  bool match_table_id = true;     // `<table>_id` where table is the singular or plural name
};

std::vector<ForeignKeyDef> infer_foreign_keys(const SchemaSnapshot& snapshot, const FkInferenceConfig& config = {});

/// Up to `n` rows ordered by primary key, else by all columns in declaration order.
std::vector<Row> sample_rows(Database& db, std::string_view table, std::size_t n = kDefaultSampleSize);

/// Snapshot with samples of every table attached.
SchemaSnapshot attach_samples(const SchemaSnapshot& snapshot, Database& db, std::size_t n = kDefaultSampleSize);

/// Deterministic prompt text describing the tables in `scope`.
std::string schema_wording(const SchemaSnapshot& snapshot, const NameSet& scope, bool include_samples);

inline constexpr std::string_view kEmptyScopeWording = "No tables are in scope for this session.\n";

}  // namespace semlayer
