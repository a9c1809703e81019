#include <gtest/gtest.h>

#include <numeric>

#include "semlayer/errors.hpp"
#include "semlayer/schema_model.hpp"
#include "testing/generators.hpp"

using namespace semlayer;
using namespace semlayer::testing;

namespace {

std::string fixture(const std::string& rel) { return read_file(std::string(SEMLAYER_FIXTURES_DIR) + "/" + rel); }

SchemaSnapshot staff_orders() { return ingest_ddl(fixture("staff_orders/schema.sql")); }

}  // namespace

TEST(IngestDdl, StaffOrdersOrdersAndStaff) {
  const auto s = staff_orders();
  ASSERT_EQ(s.tables().size(), 2u);
  EXPECT_EQ(s.column_count(), 5u);
  ASSERT_EQ(s.foreign_keys().size(), 1u);
  const auto& fk = s.foreign_keys()[0];
  EXPECT_EQ(fk.from, (ColumnRef{"orders", "staff_id"}));
  EXPECT_EQ(fk.to, (ColumnRef{"staff", "staff_id"}));
  EXPECT_EQ(fk.provenance, FkProvenance::declared);
  const auto* orders = s.find_table("ORDERS");
  ASSERT_NE(orders, nullptr);
  EXPECT_EQ(orders->columns[2].name, "total_price");
  EXPECT_EQ(orders->columns[2].description, "total price of the order");
  EXPECT_TRUE(orders->columns[0].primary_key);
}

TEST(IngestDdl, EmptyScript) {
  const auto s = ingest_ddl("");
  EXPECT_TRUE(s.tables().empty());
  EXPECT_EQ(s.column_count(), 0u);
  EXPECT_TRUE(ingest_ddl("  -- nothing here\n").tables().empty());
}

TEST(IngestDdl, StarSchemaMatchesManifest) {
  const auto gen = star_schema_ddl(10, 7);
  const auto s = ingest_ddl(gen.ddl);
  EXPECT_EQ(s.tables().size(), gen.manifest.tables);
  EXPECT_EQ(s.column_count(), gen.manifest.columns);
  EXPECT_EQ(s.foreign_keys().size(), gen.manifest.foreign_keys);
}

TEST(IngestDdl, RandomSchemasMatchManifest) {
  for (std::uint32_t seed = 1; seed <= 30; ++seed) {
    const auto gen = random_schema_ddl(3 + seed % 9, seed);
    const auto s = ingest_ddl(gen.ddl);
    EXPECT_EQ(s.tables().size(), gen.manifest.tables) << gen.ddl;
    EXPECT_EQ(s.column_count(), gen.manifest.columns) << gen.ddl;
    EXPECT_EQ(s.foreign_keys().size(), gen.manifest.foreign_keys) << gen.ddl;
    std::size_t widths = 0;
    for (const auto& t : s.tables()) widths += t.width();
    EXPECT_EQ(widths, s.column_count());
  }
}

TEST(IngestDdl, ErrorsCarryStatementIndexAndToken) {
  try {
    ingest_ddl("CREATE TABLE a (x INT);\nCREATE TABLE b (y INT,, z);");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.statement_index(), 1u);
    EXPECT_EQ(e.token(), ",");
  }
  try {
    ingest_ddl("CREATE TABLE a (x INT);\nCREATE VIEW v AS SELECT 1;");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.statement_index(), 1u);
    EXPECT_EQ(e.token(), "CREATE");
  }
  EXPECT_THROW(ingest_ddl("CREATE TABLE a (x);\nCREATE TABLE A (y);"), SchemaError);
  EXPECT_THROW(ingest_ddl("CREATE TABLE a (x REFERENCES nowhere (id));"), SchemaError);
}

TEST(IngestDdl, CompositeKeysShareGroup) {
  const auto s = ingest_ddl(
      "CREATE TABLE p (a INT, b INT, PRIMARY KEY (a, b));\n"
      "CREATE TABLE c (id INT PRIMARY KEY, pa INT, pb INT, FOREIGN KEY (pa, pb) REFERENCES p);");
  ASSERT_EQ(s.foreign_keys().size(), 2u);
  EXPECT_EQ(s.foreign_keys()[0].group, s.foreign_keys()[1].group);
  EXPECT_EQ(s.foreign_keys()[1].to, (ColumnRef{"p", "b"}));
}

TEST(Snapshot, ValidatesInvariants) {
  EXPECT_THROW(SchemaSnapshot({TableDef{"t", {}}}, {}), SchemaError);
  EXPECT_THROW(SchemaSnapshot({TableDef{"t", {{"a", "", "", false}, {"A", "", "", false}}}}, {}), SchemaError);
  EXPECT_THROW(SchemaSnapshot({TableDef{"t", {{"a", "", "", false}}}}, {{{"t", "a"}, {"t", "a"}, {}, 0}}), SchemaError);
  EXPECT_THROW(SchemaSnapshot({TableDef{"t", {{"a", "", "", false}}}}, {}, SampleMap{{"u", {}}}), SchemaError);
  EXPECT_THROW(SchemaSnapshot({TableDef{"t", {{"a", "", "", false}}}}, {}, SampleMap{{"t", {Row{"1", "2"}}}}),
               SchemaError);
}

TEST(Snapshot, JsonRoundTrip) {
  Database db = Database::in_memory();
  const auto base = staff_orders();
  materialize(base, db);
  db.exec(fixture("staff_orders/data.sql"));
  const auto s = attach_samples(base, db, 2);
  const auto doc = s.to_json();
  EXPECT_EQ(doc.at("version"), "schema_snapshot.v1");
  EXPECT_EQ(SchemaSnapshot::from_json(doc), s);
  EXPECT_EQ(canonical_json(SchemaSnapshot::from_json(json::parse(canonical_json(doc))).to_json()),
            canonical_json(doc));
}

TEST(Introspect, StaffOrdersRoundTrip) {
  Database db = Database::in_memory();
  db.exec(fixture("staff_orders/schema.sql"));
  EXPECT_EQ(introspect_database(db), staff_orders());
}

TEST(Introspect, ViewsAreNotTables) {
  Database db = Database::in_memory();
  db.exec(fixture("staff_orders/schema.sql"));
  db.exec("CREATE VIEW intern AS SELECT * FROM staff WHERE position = 'intern'");
  const auto s = introspect_database(db);
  EXPECT_EQ(s.tables().size(), 2u);
  EXPECT_EQ(s.find_table("intern"), nullptr);
}

TEST(Introspect, MaterializeRoundTripOnGeneratedDdl) {
  for (std::uint32_t seed = 100; seed < 130; ++seed) {
    const auto gen = random_schema_ddl(2 + seed % 8, seed);
    const auto s = ingest_ddl(gen.ddl);
    Database db = Database::in_memory();
    materialize(s, db);
    EXPECT_EQ(introspect_database(db), s) << gen.ddl;
    // the render is itself ingestible to the same snapshot
    EXPECT_EQ(ingest_ddl(render_ddl(s)), s);
  }
}

TEST(Introspect, SixtyOneTableFixture) {
  const auto widths = widths_with_marginals(61, 1770, 27601, 28);
  const auto s = snapshot_from_widths(widths);
  Database db = Database::in_memory();
  materialize(s, db);
  const auto back = introspect_database(db);
  EXPECT_EQ(back.tables().size(), 61u);
  EXPECT_EQ(back.column_count(), 1770u);
}

TEST(InferForeignKeys, PrimaryKeyNameMatch) {
  const auto s = ingest_ddl(
      "CREATE TABLE users (user_id INTEGER PRIMARY KEY, name TEXT);\n"
      "CREATE TABLE events (event_id INTEGER PRIMARY KEY, user_id INTEGER, kind TEXT);");
  const auto fks = infer_foreign_keys(s);
  ASSERT_EQ(fks.size(), 1u);
  EXPECT_EQ(fks[0].from, (ColumnRef{"events", "user_id"}));
  EXPECT_EQ(fks[0].to, (ColumnRef{"users", "user_id"}));
  EXPECT_EQ(fks[0].provenance, FkProvenance::inferred);
}

TEST(InferForeignKeys, NoSharedNames) {
  const auto s = ingest_ddl("CREATE TABLE a (x INT PRIMARY KEY);\nCREATE TABLE b (y INT PRIMARY KEY);");
  EXPECT_TRUE(infer_foreign_keys(s).empty());
}

TEST(InferForeignKeys, DeclaredNotReemitted) {
  EXPECT_TRUE(infer_foreign_keys(staff_orders()).empty());
}

TEST(InferForeignKeys, TableIdPattern) {
  const auto s = ingest_ddl(
      "CREATE TABLE categories (id INTEGER PRIMARY KEY);\n"
      "CREATE TABLE item (id INTEGER PRIMARY KEY, category_id INT);\n"
      "CREATE TABLE bid (id INTEGER PRIMARY KEY, items_id INT);");
  const auto fks = infer_foreign_keys(s, {.enabled = true, .match_primary_key = false, .match_table_id = true});
  ASSERT_EQ(fks.size(), 2u);
  EXPECT_EQ(fks[0].from, (ColumnRef{"bid", "items_id"}));
  EXPECT_EQ(fks[0].to, (ColumnRef{"item", "id"}));
  EXPECT_EQ(fks[1].from, (ColumnRef{"item", "category_id"}));
  EXPECT_EQ(fks[1].to, (ColumnRef{"categories", "id"}));
}

TEST(InferForeignKeys, DisjointFromDeclaredAndEndpointsExist) {
  for (std::uint32_t seed = 1; seed <= 40; ++seed) {
    const auto s = ingest_ddl(random_schema_ddl(2 + seed % 10, seed).ddl);
    for (const auto& fk : infer_foreign_keys(s)) {
      EXPECT_TRUE(s.has_column(fk.from));
      EXPECT_TRUE(s.has_column(fk.to));
      for (const auto& d : s.foreign_keys()) EXPECT_FALSE(d.from == fk.from && d.to == fk.to);
    }
  }
}

TEST(SampleRows, LimitsAndDeterminism) {
  Database db = Database::in_memory();
  db.exec("CREATE TABLE big (k INTEGER PRIMARY KEY, v TEXT); CREATE TABLE empty (a TEXT); CREATE TABLE nokey (a, b);");
  for (int i = 100; i > 0; --i) db.exec("INSERT INTO big VALUES (" + std::to_string(i) + ", 'v')");
  db.exec("INSERT INTO nokey VALUES ('b', 2), ('a', 9), ('a', 1)");
  const auto rows = sample_rows(db, "big", 5);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0][0], "1");
  EXPECT_EQ(rows[4][0], "5");
  EXPECT_EQ(sample_rows(db, "big", 5), rows);
  EXPECT_TRUE(sample_rows(db, "empty", 5).empty());
  const auto nk = sample_rows(db, "nokey", 2);
  ASSERT_EQ(nk.size(), 2u);
  EXPECT_EQ(nk[0], (Row{"a", "1"}));
  EXPECT_THROW(sample_rows(db, "missing", 5), DatabaseError);
}

TEST(SchemaWording, MentionsTablesAndKeys) {
  const auto s = staff_orders();
  const auto text = schema_wording(s, {"orders", "staff"}, false);
  EXPECT_NE(text.find("Table orders"), std::string::npos);
  EXPECT_NE(text.find("Table staff"), std::string::npos);
  EXPECT_NE(text.find("orders.staff_id references staff.staff_id"), std::string::npos);
  EXPECT_NE(text.find("total price of the order"), std::string::npos);
  EXPECT_EQ(text, schema_wording(s, {"staff", "orders"}, false));
}

TEST(SchemaWording, ScopeRestrictsKeys) {
  const auto text = schema_wording(staff_orders(), {"orders"}, false);
  EXPECT_EQ(text.find("Table staff"), std::string::npos);
  EXPECT_EQ(text.find("references"), std::string::npos);
}

TEST(SchemaWording, EmptyScope) {
  const auto text = schema_wording(staff_orders(), {}, true);
  EXPECT_EQ(text, kEmptyScopeWording);
  EXPECT_EQ(text.find("Table "), std::string::npos);
}

TEST(SchemaWording, UnknownTable) { EXPECT_THROW(schema_wording(staff_orders(), {"nope"}, false), SchemaError); }

TEST(SchemaWording, SamplesInFencedBlock) {
  Database db = Database::in_memory();
  materialize(staff_orders(), db);
  db.exec(fixture("staff_orders/data.sql"));
  const auto s = attach_samples(staff_orders(), db, 2);
  const auto text = schema_wording(s, {"staff"}, true);
  const auto fence = text.find("```text\nstaff_id | position\n1 | intern\n2 | manager\n```");
  EXPECT_NE(fence, std::string::npos) << text;
  EXPECT_EQ(schema_wording(s, {"staff"}, false).find("```"), std::string::npos);
}

TEST(WidthGenerator, HitsRequestedMarginals) {
  struct Case {
    std::size_t count, columns, relations, median, max;
  };
  for (const auto& c : {Case{61, 1770, 27601, 28, 0}, Case{113, 6879, 1121976, 24, 1130}}) {
    auto w = widths_with_marginals(c.count, c.columns, c.relations, c.median, c.max);
    ASSERT_EQ(w.size(), c.count);
    std::size_t sum = 0, rel = 0;
    for (auto x : w) {
      sum += x;
      rel += x * (x - 1) / 2;
      EXPECT_GE(x, 1u);
    }
    EXPECT_EQ(sum, c.columns);
    EXPECT_EQ(rel, c.relations);
    std::sort(w.begin(), w.end());
    EXPECT_EQ(w[(w.size() - 1) / 2], c.median);
    if (c.max) EXPECT_EQ(w.back(), c.max);
  }
}
