#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semlayer/database.hpp"
#include "semlayer/identifiers.hpp"
#include "semlayer/io.hpp"
#include "semlayer/schema_model.hpp"

namespace semlayer {

inline constexpr std::string_view kCatalogVersion = "catalog.v1";

struct ViewDefinition {
  std::string name;
  std::string sql;  // single CREATE VIEW statement, no trailing semicolon
  /// Output names in order. Before lineage resolution `*` and `t.*` appear
  /// literally; after resolution they are expanded.
  std::vector<std::string> output_columns;
  NameSet referenced_objects;  // tables and views named in FROM clauses (CTE names excluded)

  friend bool operator==(const ViewDefinition&, const ViewDefinition&) = default;
};

struct OutputLineage {
  std::string name;
  ColumnSet origins;  // base-table columns only; empty for literals

  friend bool operator==(const OutputLineage&, const OutputLineage&) = default;
};

struct Lineage {
  std::vector<OutputLineage> columns;
  ColumnSet predicate_columns;  // WHERE / JOIN / GROUP BY / HAVING (and window partitions)

  /// Union of all output origin sets.
  ColumnSet output_origins() const;
  /// Output origins plus predicate columns: the columns this view "covers".
  ColumnSet coverage() const;

  friend bool operator==(const Lineage&, const Lineage&) = default;
};

struct ValidationRecord {
  bool passed = false;
  enum class Stage { none, create, probe } failed_stage = Stage::none;
  std::string error;  // engine message, verbatim
  std::size_t probe_rows = 0;
  /// Logical validation clock (position in the campaign's validation order).
  /// Wall-clock time is kept out of catalog artifacts so replays stay byte-identical.
  std::size_t sequence = 0;

  friend bool operator==(const ValidationRecord&, const ValidationRecord&) = default;
};

struct CatalogEntry {
  ViewDefinition view;
  Lineage lineage;
  std::size_t session_id = 0;
  ValidationRecord validation;

  friend bool operator==(const CatalogEntry&, const CatalogEntry&) = default;
};

/// Parses one CREATE VIEW statement. Throws ParseError.
ViewDefinition parse_view(std::string_view sql);

/// Extracts the view name from a CREATE VIEW statement using only the
/// statement prefix, so it works for bodies outside the parser's dialect.
std::optional<std::string> view_name_of(std::string_view sql);

/// Rewrites the view name in a CREATE VIEW statement.
std::string rename_view(std::string_view sql, std::string_view new_name);

class Catalog;

/// Column-level provenance of `view`, resolved transitively through catalog
/// entries down to base columns of `snapshot`. Throws LineageError on unknown
/// or cyclic references, ambiguous columns, and unsupported constructs.
/// Returns the definition with expanded output columns alongside the lineage.
std::pair<ViewDefinition, Lineage> resolve_lineage(const ViewDefinition& view, const SchemaSnapshot& snapshot,
                                                    const Catalog& catalog);

/// Creates the view inside a savepoint and probes it with `SELECT * ... LIMIT 1`.
/// On success the view stays defined; on failure it is rolled back.
ValidationRecord validate_view(Database& db, std::string_view sql);

class Catalog {
 public:
  using EntryMap = std::map<std::string, CatalogEntry, ILess>;

  Catalog() = default;
  explicit Catalog(std::string snapshot_digest) : snapshot_digest_(std::move(snapshot_digest)) {}

  /// Adds an entry. Rejects duplicate names, failed validation, and
  /// self-references or references to unknown catalog views (cycles).
  void register_entry(CatalogEntry entry);

  const CatalogEntry* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  const EntryMap& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::string& snapshot_digest() const noexcept { return snapshot_digest_; }

  /// Fresh name: `base`, else `base_2`, `base_3`, ...
  std::string fresh_name(std::string_view base, const NameSet& also_taken = {}) const;

  json to_json() const;
  static Catalog from_json(const json& doc);
  void save(const std::filesystem::path& path) const;
  static Catalog load(const std::filesystem::path& path);

  friend bool operator==(const Catalog& a, const Catalog& b) {
    return a.snapshot_digest_ == b.snapshot_digest_ && a.entries_ == b.entries_;
  }

 private:
  std::string snapshot_digest_;
  EntryMap entries_;
};

/// Digest identifying a snapshot inside catalog documents.
std::string snapshot_digest(const SchemaSnapshot& snapshot);

}  // namespace semlayer
