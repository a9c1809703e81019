#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semlayer/io.hpp"
#include "semlayer/schema_model.hpp"
#include "semlayer/view_catalog.hpp"

namespace semlayer {

inline constexpr std::string_view kReportVersion = "refinement_report.v1";
inline constexpr double kDefaultTrim = 0.01;

struct SchemaStats {
  std::size_t table_count = 0;
  std::size_t median_table_width = 0;
  std::size_t max_table_width = 0;
  std::size_t column_count = 0;
  std::size_t relation_count = 0;  // sum of C(w, 2)

  friend bool operator==(const SchemaStats&, const SchemaStats&) = default;
};

struct LayerStats {
  std::size_t view_count = 0;
  std::size_t median_view_width = 0;
  std::size_t max_view_width = 0;
  /// Base columns in some view's output lineage or predicates.
  std::size_t original_columns_used = 0;
  /// Base columns in some view's output lineage (predicates ignored).
  std::size_t output_columns_used = 0;
  std::size_t schema_column_count = 0;
  std::size_t preserved_relations = 0;
  std::size_t new_relations = 0;
  std::size_t layer_relation_count = 0;

  double coverage_fraction() const;
  double output_coverage_fraction() const;

  friend bool operator==(const LayerStats&, const LayerStats&) = default;
};

/// Lower median: element ⌊(n-1)/2⌋ of the sorted list; 0 for an empty list.
std::size_t lower_median(std::vector<std::size_t> values);

SchemaStats schema_stats(const SchemaSnapshot& snapshot);

/// Throws CatalogError when the catalog was built for another snapshot or its
/// lineage names columns the snapshot lacks.
LayerStats layer_stats(const Catalog& catalog, const SchemaSnapshot& snapshot);

struct WidthHistogram {
  double trim = 0;
  std::vector<std::string> dropped;            // widest views removed by the trim, widest first
  std::map<std::size_t, std::size_t> buckets;  // width -> view count

  std::size_t total() const;
  friend bool operator==(const WidthHistogram&, const WidthHistogram&) = default;
};

/// Drops ⌈trim·n⌉ widest views (equal widths: lexicographically smaller names
/// first) and buckets the rest by exact width. Throws on trim outside [0, 0.5].
WidthHistogram width_histogram(std::vector<std::pair<std::string, std::size_t>> named_widths, double trim);
WidthHistogram width_histogram(const Catalog& catalog, double trim);

struct RefinementReport {
  SchemaStats schema;
  LayerStats layer;
  WidthHistogram histogram;
  std::optional<std::string> generated_at;  // left empty in replay artifacts
  json config = json::object();

  friend bool operator==(const RefinementReport&, const RefinementReport&) = default;
};

RefinementReport build_report(const Catalog& catalog, const SchemaSnapshot& snapshot, double trim = kDefaultTrim,
                              json config = json::object());

enum class ReportFormat { json, markdown };

json report_to_json(const RefinementReport& report);
RefinementReport report_from_json(const json& doc);

std::string render_report(const RefinementReport& report, ReportFormat format);

/// Two-column comparison table with the stats row labels only.
std::string render_stats_table(const RefinementReport& report);

/// "width,count" lines, header included.
std::string histogram_csv(const WidthHistogram& histogram);

}  // namespace semlayer
