#include "semlayer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "semlayer/errors.hpp"

namespace semlayer {

double LayerStats::coverage_fraction() const {
  return schema_column_count ? static_cast<double>(original_columns_used) / static_cast<double>(schema_column_count) : 0.0;
}

double LayerStats::output_coverage_fraction() const {
  return schema_column_count ? static_cast<double>(output_columns_used) / static_cast<double>(schema_column_count) : 0.0;
}

std::size_t lower_median(std::vector<std::size_t> values) {
  if (values.empty()) return 0;
  const std::size_t k = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

SchemaStats schema_stats(const SchemaSnapshot& snapshot) {
  SchemaStats s;
  std::vector<std::size_t> widths;
  for (const auto& t : snapshot.tables()) {
    const std::size_t w = t.width();
    widths.push_back(w);
    s.column_count += w;
    s.relation_count += w * (w - 1) / 2;
    s.max_table_width = std::max(s.max_table_width, w);
  }
  s.table_count = widths.size();
  s.median_table_width = lower_median(std::move(widths));
  return s;
}

LayerStats layer_stats(const Catalog& catalog, const SchemaSnapshot& snapshot) {
  if (!catalog.snapshot_digest().empty() && catalog.snapshot_digest() != snapshot_digest(snapshot)) {
    throw CatalogError("catalog was built for a different schema snapshot");
  }
  LayerStats s;
  s.schema_column_count = snapshot.column_count();
  ColumnSet covered, output;
  std::set<ColumnPair> pairs;
  std::vector<std::size_t> widths;
  for (const auto& [name, e] : catalog.entries()) {
    const auto origins = e.lineage.output_origins();
    for (const auto& c : e.lineage.coverage()) {
      if (!snapshot.has_column(c)) throw CatalogError("view " + name + " uses unknown column " + c.qualified());
    }
    output.insert(origins.begin(), origins.end());
    covered.insert(origins.begin(), origins.end());
    covered.insert(e.lineage.predicate_columns.begin(), e.lineage.predicate_columns.end());
    for (auto a = origins.begin(); a != origins.end(); ++a)
      for (auto b = std::next(a); b != origins.end(); ++b) pairs.insert(ColumnPair::make(*a, *b));
    widths.push_back(e.view.output_columns.size());
    s.max_view_width = std::max(s.max_view_width, e.view.output_columns.size());
  }
  s.view_count = widths.size();
  s.median_view_width = lower_median(std::move(widths));
  s.original_columns_used = covered.size();
  s.output_columns_used = output.size();
  for (const auto& p : pairs) {
    if (iequals(p.first.table, p.second.table)) ++s.preserved_relations;
    else ++s.new_relations;
  }
  s.layer_relation_count = pairs.size();
  return s;
}

std::size_t WidthHistogram::total() const {
  std::size_t n = 0;
  for (const auto& [w, c] : buckets) n += c;
  return n;
}

WidthHistogram width_histogram(std::vector<std::pair<std::string, std::size_t>> named_widths, double trim) {
  if (!(trim >= 0.0 && trim <= 0.5)) throw std::invalid_argument("trim must lie in [0, 0.5]");
  std::sort(named_widths.begin(), named_widths.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return icompare(a.first, b.first) == std::strong_ordering::less;
  });
  // the epsilon keeps products like 0.01 * 100 from rounding up to 2
  const auto drop = static_cast<std::size_t>(std::ceil(trim * static_cast<double>(named_widths.size()) - 1e-9));
  WidthHistogram h;
  h.trim = trim;
  for (std::size_t i = 0; i < named_widths.size(); ++i) {
    if (i < drop) h.dropped.push_back(named_widths[i].first);
    else ++h.buckets[named_widths[i].second];
  }
  return h;
}

WidthHistogram width_histogram(const Catalog& catalog, double trim) {
  std::vector<std::pair<std::string, std::size_t>> widths;
  for (const auto& [name, e] : catalog.entries()) widths.emplace_back(name, e.view.output_columns.size());
  return width_histogram(std::move(widths), trim);
}

RefinementReport build_report(const Catalog& catalog, const SchemaSnapshot& snapshot, double trim, json config) {
  RefinementReport r;
  r.schema = schema_stats(snapshot);
  r.layer = layer_stats(catalog, snapshot);
  r.histogram = width_histogram(catalog, trim);
  r.config = std::move(config);
  return r;
}

json report_to_json(const RefinementReport& r) {
  json buckets = json::array();
  for (const auto& [w, c] : r.histogram.buckets) buckets.push_back({{"width", w}, {"count", c}});
  const auto& l = r.layer;
  return {
      {"version", kReportVersion},
      {"generated_at", r.generated_at ? json(*r.generated_at) : json(nullptr)},
      {"config", r.config},
      {"schema",
       {{"table_count", r.schema.table_count},
        {"median_table_width", r.schema.median_table_width},
        {"max_table_width", r.schema.max_table_width},
        {"column_count", r.schema.column_count},
        {"relation_count", r.schema.relation_count}}},
      {"layer",
       {{"view_count", l.view_count},
        {"median_view_width", l.median_view_width},
        {"max_view_width", l.max_view_width},
        {"original_columns_used", l.original_columns_used},
        {"output_columns_used", l.output_columns_used},
        {"schema_column_count", l.schema_column_count},
        {"coverage_percent", format_percent(l.original_columns_used, l.schema_column_count)},
        {"output_coverage_percent", format_percent(l.output_columns_used, l.schema_column_count)},
        {"preserved_relations", l.preserved_relations},
        {"preserved_percent", format_percent(l.preserved_relations, r.schema.relation_count)},
        {"new_relations", l.new_relations},
        {"layer_relation_count", l.layer_relation_count}}},
      {"width_histogram", {{"trim", r.histogram.trim}, {"dropped", r.histogram.dropped}, {"buckets", std::move(buckets)}}},
  };
}

RefinementReport report_from_json(const json& doc) {
  if (doc.value("version", "") != kReportVersion) throw Error("report version mismatch: expected refinement_report.v1");
  RefinementReport r;
  const auto& s = doc.at("schema");
  r.schema = {s.at("table_count"), s.at("median_table_width"), s.at("max_table_width"), s.at("column_count"),
              s.at("relation_count")};
  const auto& l = doc.at("layer");
  r.layer.view_count = l.at("view_count");
  r.layer.median_view_width = l.at("median_view_width");
  r.layer.max_view_width = l.at("max_view_width");
  r.layer.original_columns_used = l.at("original_columns_used");
  r.layer.output_columns_used = l.at("output_columns_used");
  r.layer.schema_column_count = l.at("schema_column_count");
  r.layer.preserved_relations = l.at("preserved_relations");
  r.layer.new_relations = l.at("new_relations");
  r.layer.layer_relation_count = l.at("layer_relation_count");
  const auto& h = doc.at("width_histogram");
  r.histogram.trim = h.at("trim");
  r.histogram.dropped = h.at("dropped").get<std::vector<std::string>>();
  for (const auto& b : h.at("buckets")) r.histogram.buckets[b.at("width")] = b.at("count");
  if (!doc.at("generated_at").is_null()) r.generated_at = doc.at("generated_at").get<std::string>();
  r.config = doc.at("config");
  return r;
}

std::string render_stats_table(const RefinementReport& r) {
  const auto& s = r.schema;
  const auto& l = r.layer;
  std::ostringstream out;
  out << "| Original Schema | | Semantic Layer | |\n";
  out << "| --- | ---: | --- | ---: |\n";
  out << "| # tables | " << s.table_count << " | # views | " << l.view_count << " |\n";
  out << "| # median table width | " << s.median_table_width << " | # median view width | " << l.median_view_width
      << " |\n";
  out << "| # max table width | " << s.max_table_width << " | # max view width | " << l.max_view_width << " |\n";
  out << "| # columns | " << s.column_count << " | # original columns | " << l.original_columns_used << " |\n";
  out << "| # relations | " << s.relation_count << " | # relations | " << l.layer_relation_count << " |\n";
  return out.str();
}

std::string render_report(const RefinementReport& r, ReportFormat format) {
  if (format == ReportFormat::json) return canonical_json(report_to_json(r));
  const auto& l = r.layer;
  std::ostringstream out;
  out << "# Schema refinement report\n\n";
  out << render_stats_table(r) << "\n";
  out << "## Coverage and relations\n\n";
  out << "| Measure | Value |\n| --- | --- |\n";
  out << "| coverage (output lineage or predicates) | " << format_percent(l.original_columns_used, l.schema_column_count)
      << " (" << l.original_columns_used << " / " << l.schema_column_count << ") |\n";
  out << "| coverage (output lineage only) | " << format_percent(l.output_columns_used, l.schema_column_count) << " ("
      << l.output_columns_used << " / " << l.schema_column_count << ") |\n";
  out << "| preserved relations | " << l.preserved_relations << " ("
      << format_percent(l.preserved_relations, r.schema.relation_count) << " of " << r.schema.relation_count
      << ") |\n";
  out << "| new relations | " << l.new_relations << " |\n\n";
  out << "## View width distribution\n\n";
  if (!r.histogram.dropped.empty()) {
    out << "Widest " << r.histogram.dropped.size() << " of " << l.view_count << " views excluded (trim "
        << format_percent(static_cast<std::uint64_t>(std::llround(r.histogram.trim * 1e6)), 1'000'000) << ").\n\n";
  }
  out << "| width | views |\n| ---: | ---: |\n";
  for (const auto& [w, c] : r.histogram.buckets) out << "| " << w << " | " << c << " |\n";
  return out.str();
}

std::string histogram_csv(const WidthHistogram& h) {
  std::string out = "width,count\n";
  for (const auto& [w, c] : h.buckets) out += std::to_string(w) + "," + std::to_string(c) + "\n";
  return out;
}

}  // namespace semlayer
