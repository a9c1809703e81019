#include <gtest/gtest.h>

#include "semlayer/agent_sim.hpp"
#include "semlayer/errors.hpp"

using namespace semlayer;

namespace {

const std::filesystem::path kFixtures = SEMLAYER_FIXTURES_DIR;

struct Fixture {
  SchemaSnapshot snapshot;
  Database db = Database::in_memory();
};

Fixture load_fixture(const std::string& name) {
  Fixture f;
  const auto ddl = read_file(kFixtures / name / "schema.sql");
  f.snapshot = ingest_ddl(ddl);
  f.db.exec(ddl);
  f.db.exec(read_file(kFixtures / name / "data.sql"));
  return f;
}

SessionConfig scoped(const SchemaSnapshot& s) {
  SessionConfig c;
  for (const auto& t : s.tables()) c.scope.tables.insert(t.name);
  return c;
}

ScriptedTranscript script(std::vector<ChatMessage> turns) { return {std::move(turns), 0}; }

ChatMessage verifier_call(std::vector<std::string> defs) {
  return {Role::verifier, "", ToolCall{"call_1", "materialize_view_tool", {{"view_definitions", defs}}}, std::nullopt};
}

class ThrowingProvider final : public ChatProvider {
 public:
  explicit ThrowingProvider(std::size_t after) : after_(after) {}
  ChatMessage chat(const std::vector<ChatMessage>&, Role speaker, const ChatOptions&) override {
    if (calls_++ >= after_) throw ProviderError("endpoint returned HTTP 503");
    return {speaker, speaker == Role::analyst ? "```sql\nCREATE VIEW early AS SELECT staff_id FROM staff;\n```" : "Looks fine."};
  }

 private:
  std::size_t after_;
  std::size_t calls_ = 0;
};

}  // namespace

TEST(ExtractSql, SampleChatViewMessage) {
  const auto t = load_transcript(kFixtures / "braze" / "transcripts" / "session_1.jsonl");
  const auto stmts = extract_sql_blocks(t.turns[4]);
  std::vector<std::string> views;
  std::size_t queries = 0;
  for (const auto& s : stmts) {
    if (s.kind == sql::StatementKind::create_view) views.push_back(*view_name_of(s.text));
    if (s.kind == sql::StatementKind::query) ++queries;
  }
  EXPECT_EQ(views, (std::vector<std::string>{"users_interacted_with_email_push_campaigns", "email_engagement_metrics",
                                             "push_notification_engagement_metrics"}));
  EXPECT_EQ(queries, 1u);
  EXPECT_EQ(stmts[0].text.rfind("-- Creating View 1", 0), 0u);
}

TEST(ExtractSql, UnfencedAndQueryOnly) {
  EXPECT_TRUE(extract_sql_blocks({Role::analyst, "SELECT 1; no fences here"}).empty());
  EXPECT_TRUE(extract_sql_blocks({Role::analyst, "```python\nprint(1)\n```"}).empty());
  const auto q = extract_sql_blocks({Role::analyst, "Here:\n```sql\nWITH x AS (SELECT 1 AS a) SELECT a FROM x;\n```\n"});
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0].kind, sql::StatementKind::query);
  const auto unclosed = extract_sql_blocks({Role::analyst, "```SQL\nSELECT 1;\nSELECT 2"});
  EXPECT_EQ(unclosed.size(), 2u);
}

TEST(Termination, WholeWordsIgnoringCase) {
  const std::vector<std::string> phrases = {"goodbye", "terminate"};
  EXPECT_TRUE(detect_termination("Great job. Goodbye.", phrases));
  EXPECT_FALSE(detect_termination("", phrases));
  EXPECT_FALSE(detect_termination("good buy", phrases));
  EXPECT_FALSE(detect_termination("goodbyes all round", phrases));
  EXPECT_TRUE(detect_termination("TERMINATE", phrases));
  EXPECT_FALSE(detect_termination("exterminate", phrases));
}

TEST(MaterializeTool, ResultsPerDefinition) {
  auto f = load_fixture("staff_orders");
  EXPECT_TRUE(materialize_view_tool({}, f.db).empty());
  const auto ok = materialize_view_tool({"CREATE VIEW v1 AS SELECT staff_id FROM staff",
                                         "CREATE VIEW v2 AS SELECT order_id FROM orders",
                                         "CREATE VIEW v3 AS SELECT total_price FROM orders"},
                                        f.db);
  EXPECT_EQ(ok, std::vector<std::string>(3, "View successfully defined."));
  const auto mixed = materialize_view_tool({"CREATE VIEW m1 AS SELECT staff_id FROM staff",
                                            "CREATE VIEW m2 AS SELECT nope FROM staff",
                                            "CREATE VIEW m3 AS SELECT position FROM staff"},
                                           f.db);
  EXPECT_EQ(mixed[0], "View successfully defined.");
  EXPECT_NE(mixed[1].find("no such column"), std::string::npos) << mixed[1];
  EXPECT_EQ(mixed[2], "View successfully defined.");
  EXPECT_FALSE(f.db.object_exists("m2", "view"));
  EXPECT_TRUE(f.db.object_exists("m3", "view"));
}

TEST(Prompts, RolesAndMemory) {
  const auto snap = ingest_ddl(read_file(kFixtures / "staff_orders" / "schema.sql"));
  const auto wording = schema_wording(snap, {"orders", "staff"}, false);
  SessionMemory empty;
  const auto fresh = render_prompt(Role::analyst, wording, empty);
  EXPECT_NE(fresh.find("orders"), std::string::npos);
  EXPECT_NE(fresh.find("staff"), std::string::npos);
  EXPECT_EQ(fresh.find("earlier sessions"), std::string::npos);

  SessionMemory memory;
  memory.defined_view_names = {"intern"};
  const auto later = render_prompt(Role::analyst, wording, memory);
  EXPECT_NE(later.find("earlier sessions"), std::string::npos);
  EXPECT_NE(later.find("- intern"), std::string::npos);

  EXPECT_NE(render_prompt(Role::critic, wording, empty).find("decomposed into small"), std::string::npos);
  EXPECT_NE(render_prompt(Role::verifier, wording, empty).find("materialize_view_tool"), std::string::npos);
  EXPECT_EQ(render_prompt(Role::analyst, wording, memory), later);
}

TEST(Session, SampleChatReplayDefinesThreeViews) {
  auto f = load_fixture("braze");
  ReplayProvider provider(load_transcript(kFixtures / "braze" / "transcripts" / "session_1.jsonl"));
  Catalog catalog(snapshot_digest(f.snapshot));
  SessionMemory memory;
  const auto out = run_session(scoped(f.snapshot), memory, provider, f.db, f.snapshot, catalog, 1);

  EXPECT_EQ(out.termination, TerminationReason::phrase);
  ASSERT_EQ(out.validated_views.size(), 3u) << out.to_json().dump(2);
  EXPECT_TRUE(out.rejected_views.empty());
  EXPECT_TRUE(out.divergences.empty());
  EXPECT_TRUE(catalog.contains("users_interacted_with_email_push_campaigns"));
  EXPECT_TRUE(catalog.contains("email_engagement_metrics"));
  EXPECT_TRUE(catalog.contains("push_notification_engagement_metrics"));
  ASSERT_EQ(out.transcript.size(), 10u);
  EXPECT_EQ(*out.transcript.back().tool_result, json(std::vector<std::string>(3, "View successfully defined.")));
  EXPECT_EQ(provider.script().remaining(), 0u);
  EXPECT_EQ(memory.defined_view_names.size(), 3u);
  EXPECT_EQ(memory.session_count, 1u);
  EXPECT_EQ(memory.task_summaries.size(), 1u);
  EXPECT_TRUE(memory.covered_columns.count({"USERS_MESSAGES_EMAIL_SEND_VIEW", "OPEN_RATE"}));
  // two analysis queries before the views existed, one after them that still fails
  ASSERT_EQ(out.queries.size(), 3u);
  EXPECT_TRUE(out.queries[0].ok);
  EXPECT_FALSE(out.queries[2].ok);
  EXPECT_EQ(out.proposed_views.size(), out.validated_views.size() + out.rejected_views.size());
}

TEST(Session, EmptyTranscriptProposesNothing) {
  auto f = load_fixture("staff_orders");
  ReplayProvider provider(ScriptedTranscript{});
  Catalog catalog;
  SessionMemory memory;
  const auto out = run_session(scoped(f.snapshot), memory, provider, f.db, f.snapshot, catalog, 1);
  EXPECT_EQ(out.termination, TerminationReason::exhausted);
  EXPECT_TRUE(out.proposed_views.empty());
  EXPECT_TRUE(out.transcript.empty());
  EXPECT_EQ(memory.session_count, 1u);
}

TEST(Session, InvalidViewIsRejectedWithEngineError) {
  auto f = load_fixture("staff_orders");
  const std::string bad = "CREATE VIEW broken AS SELECT missing_col FROM staff";
  ReplayProvider provider(script({{Role::analyst, "```sql\n" + bad + ";\n```"},
                                  {Role::critic, "Goodbye."},
                                  verifier_call({bad}),
                                  {Role::tool, "", ToolCall{"call_1", "materialize_view_tool", {}}, json::array({"x"})}}));
  Catalog catalog;
  SessionMemory memory;
  const auto out = run_session(scoped(f.snapshot), memory, provider, f.db, f.snapshot, catalog, 1);
  EXPECT_TRUE(out.validated_views.empty());
  ASSERT_EQ(out.rejected_views.size(), 1u);
  EXPECT_NE(out.rejected_views[0].error.find("no such column: missing_col"), std::string::npos);
  EXPECT_EQ(out.divergences.size(), 1u);
  EXPECT_TRUE(catalog.empty());
}

TEST(Session, TurnLimitThenInlineVerification) {
  auto f = load_fixture("staff_orders");
  ReplayProvider provider(script({{Role::analyst, "```sql\nCREATE VIEW intern AS SELECT * FROM staff WHERE position='intern';\n```"},
                                  {Role::critic, "Consider revenue per staff member."},
                                  {Role::analyst, "Working on it."}}));
  auto config = scoped(f.snapshot);
  config.max_turns = 3;
  Catalog catalog;
  SessionMemory memory;
  const auto out = run_session(config, memory, provider, f.db, f.snapshot, catalog, 1);
  EXPECT_EQ(out.termination, TerminationReason::turn_limit);
  ASSERT_EQ(out.validated_views.size(), 1u);
  EXPECT_EQ(out.transcript.size(), 4u);
  EXPECT_EQ(out.transcript[2].role, Role::verifier);
  EXPECT_EQ(out.transcript[3].role, Role::tool);
  EXPECT_EQ(provider.script().remaining(), 1u);
}

TEST(Session, NameCollisionGetsSuffix) {
  auto f = load_fixture("braze");
  Catalog catalog(snapshot_digest(f.snapshot));
  SessionMemory memory;
  {
    ReplayProvider p(load_transcript(kFixtures / "braze" / "transcripts" / "session_1.jsonl"));
    run_session(scoped(f.snapshot), memory, p, f.db, f.snapshot, catalog, 1);
  }
  ReplayProvider again(load_transcript(kFixtures / "braze" / "transcripts" / "session_1.jsonl"));
  const auto out = run_session(scoped(f.snapshot), memory, again, f.db, f.snapshot, catalog, 2);
  ASSERT_EQ(out.validated_views.size(), 3u);
  EXPECT_TRUE(catalog.contains("email_engagement_metrics_2"));
  EXPECT_EQ(out.advisories.size(), 3u);
  EXPECT_EQ(catalog.size(), 6u);
  EXPECT_EQ(memory.defined_view_names.size(), 6u);
}

TEST(Session, ProviderErrorKeepsPartialOutcome) {
  auto f = load_fixture("staff_orders");
  ThrowingProvider provider(2);
  Catalog catalog;
  SessionMemory memory;
  const auto out = run_session(scoped(f.snapshot), memory, provider, f.db, f.snapshot, catalog, 1);
  EXPECT_EQ(out.termination, TerminationReason::provider_error);
  EXPECT_NE(out.error.find("503"), std::string::npos);
  EXPECT_EQ(out.transcript.size(), 2u);
  EXPECT_TRUE(catalog.empty());
}

TEST(Session, ConfigGuards) {
  auto f = load_fixture("staff_orders");
  ReplayProvider provider(ScriptedTranscript{});
  Catalog catalog;
  SessionMemory memory;
  auto config = scoped(f.snapshot);
  config.max_turns = 2;
  EXPECT_THROW(run_session(config, memory, provider, f.db, f.snapshot, catalog, 1), ConfigError);
  config = scoped(f.snapshot);
  config.scope.tables.insert("ghost");
  EXPECT_THROW(run_session(config, memory, provider, f.db, f.snapshot, catalog, 1), SchemaError);
}

namespace {

const char* kTwoIslands =
    "CREATE TABLE a1 (id INTEGER PRIMARY KEY, v TEXT);"
    "CREATE TABLE a2 (id INTEGER PRIMARY KEY, a1_id INTEGER REFERENCES a1(id));"
    "CREATE TABLE b1 (id INTEGER PRIMARY KEY, w TEXT);"
    "CREATE TABLE b2 (id INTEGER PRIMARY KEY, b1_id INTEGER REFERENCES b1(id));";

void write_session(const std::filesystem::path& dir, int k, const std::string& view) {
  const std::vector<ChatMessage> turns = {{Role::analyst, "```sql\n" + view + ";\n```"},
                                          {Role::critic, "Goodbye."},
                                          verifier_call({view}),
                                          {Role::tool, "", ToolCall{"call_1", "materialize_view_tool", {}},
                                           json::array({"View successfully defined."})}};
  write_file_atomic(dir / ("session_" + std::to_string(k) + ".jsonl"), transcript_to_jsonl(turns));
}

struct Islands {
  SchemaSnapshot snapshot = ingest_ddl(kTwoIslands);
  Database db = Database::in_memory();
  std::filesystem::path dir;

  explicit Islands(const std::string& tag) {
    db.exec(kTwoIslands);
    dir = std::filesystem::temp_directory_path() / ("semlayer_agent_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_session(dir, 1, "CREATE VIEW a_all AS SELECT a1.id, a1.v, a2.id AS a2_id, a2.a1_id FROM a1 JOIN a2 ON a2.a1_id = a1.id");
    write_session(dir, 2, "CREATE VIEW b_words AS SELECT w FROM b1");
  }
  ~Islands() { std::filesystem::remove_all(dir); }

  CampaignResult run(std::size_t sessions) {
    ProviderConfig pc;
    pc.kind = ProviderKind::replay;
    pc.transcript_dir = dir;
    Gateway gateway(pc);
    CampaignConfig cc;
    cc.sessions = sessions;
    return run_campaign(snapshot, build_graph(snapshot), gateway, db, cc);
  }
};

}  // namespace

TEST(Campaign, SecondSessionAvoidsCoveredComponent) {
  Islands w("avoid");
  const auto r = w.run(2);
  ASSERT_EQ(r.outcomes.size(), 2u);
  for (const auto& t : r.outcomes[0].scope.tables) EXPECT_EQ(t[0], 'a');
  for (const auto& t : r.outcomes[1].scope.tables) EXPECT_EQ(t[0], 'b') << t;
  EXPECT_EQ(r.catalog.size(), 2u);
  EXPECT_EQ(r.memory.session_count, 2u);
  EXPECT_EQ(r.catalog.find("a_all")->validation.sequence, 1u);
  EXPECT_EQ(r.catalog.find("b_words")->validation.sequence, 2u);
}

TEST(Campaign, DeterministicUnderReplay) {
  Islands first("det1"), second("det2");
  const auto a = first.run(2), b = second.run(2);
  EXPECT_EQ(canonical_json(a.catalog.to_json()), canonical_json(b.catalog.to_json()));
  EXPECT_EQ(a.memory.to_json(), b.memory.to_json());
}

TEST(Campaign, SingleSessionMatchesRunSession) {
  Islands w("single");
  const auto r = w.run(1);
  ASSERT_EQ(r.outcomes.size(), 1u);

  Islands manual("single_manual");
  ReplayProvider provider(load_transcript(manual.dir / "session_1.jsonl"));
  Catalog catalog(snapshot_digest(manual.snapshot));
  SessionMemory memory;
  SessionConfig config;
  config.scope = r.outcomes[0].scope;
  const auto out = run_session(config, memory, provider, manual.db, manual.snapshot, catalog, 1);
  EXPECT_EQ(out.to_json(), r.outcomes[0].to_json());
  EXPECT_EQ(catalog, r.catalog);
}

TEST(Campaign, MissingTranscriptsAndMemoryMonotonicity) {
  Islands w("monotone");
  std::filesystem::remove(w.dir / "session_2.jsonl");
  const auto r = w.run(3);
  ASSERT_EQ(r.outcomes.size(), 3u);
  EXPECT_EQ(r.outcomes[1].termination, TerminationReason::exhausted);
  EXPECT_EQ(r.catalog.size(), 1u);
  EXPECT_EQ(r.memory.session_count, 3u);
  EXPECT_THROW(w.run(0), ConfigError);
}

TEST(Campaign, CatalogReexecutesOnFreshDatabase) {
  auto f = load_fixture("braze");
  ReplayProvider provider(load_transcript(kFixtures / "braze" / "transcripts" / "session_1.jsonl"));
  Catalog catalog(snapshot_digest(f.snapshot));
  SessionMemory memory;
  run_session(scoped(f.snapshot), memory, provider, f.db, f.snapshot, catalog, 1);

  auto fresh = load_fixture("braze");
  std::vector<const CatalogEntry*> order;
  for (const auto& [name, e] : catalog.entries()) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](auto x, auto y) { return x->validation.sequence < y->validation.sequence; });
  for (const auto* e : order) EXPECT_TRUE(validate_view(fresh.db, e->view.sql).passed) << e->view.name;
}
