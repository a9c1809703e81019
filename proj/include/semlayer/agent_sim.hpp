#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "semlayer/database.hpp"
#include "semlayer/llm_gateway.hpp"
#include "semlayer/schema_graph.hpp"
#include "semlayer/schema_model.hpp"
#include "semlayer/sql/parser.hpp"
#include "semlayer/view_catalog.hpp"

namespace semlayer {

inline constexpr std::string_view kCampaignVersion = "campaign.v1";
inline constexpr std::string_view kMaterializeTool = "materialize_view_tool";
inline constexpr std::string_view kViewDefined = "View successfully defined.";
inline constexpr std::size_t kDefaultMaxTurns = 12;

enum class VerifierMode { tool, inline_sql };

std::string_view to_string(VerifierMode mode) noexcept;
VerifierMode verifier_mode_from_string(std::string_view label);

struct SessionConfig {
  std::size_t max_turns = kDefaultMaxTurns;  // Analyst/Critic turns before the Verifier is called in
  SubgraphSample scope;
  std::vector<std::string> termination_phrases = {"goodbye", "terminate"};
  VerifierMode verifier_mode = VerifierMode::tool;
  bool include_samples = false;
  std::size_t query_preview_rows = 5;

  /// Throws ConfigError when max_turns < 3 or no phrase is configured.
  void validate() const;
};

struct SessionMemory {
  NameSet defined_view_names;
  std::vector<std::string> task_summaries;
  ColumnSet covered_columns;
  std::size_t session_count = 0;

  /// Prior views and tasks as prompt text; empty when nothing is remembered.
  std::string digest() const;
  json to_json() const;
};

enum class TerminationReason { phrase, turn_limit, exhausted, provider_error };

std::string_view to_string(TerminationReason reason) noexcept;

struct RejectedView {
  std::string sql;
  std::string error;
};

/// An analysis query run read-only after an Analyst turn.
struct QueryRun {
  std::string sql;
  bool ok = false;
  std::size_t rows = 0;  // rows in the preview
  std::string error;
};

struct SessionOutcome {
  std::size_t session_id = 0;
  SubgraphSample scope;
  std::vector<ChatMessage> transcript;
  std::vector<std::string> proposed_views;  // as submitted for materialization, after renaming
  std::vector<CatalogEntry> validated_views;
  std::vector<RejectedView> rejected_views;
  std::vector<QueryRun> queries;
  TerminationReason termination = TerminationReason::turn_limit;
  std::string error;                    // provider failure text
  std::vector<std::string> advisories;  // renames and other notes
  std::vector<std::string> divergences; // replay: recorded vs executed tool results

  json to_json() const;  // summary without the transcript
};

struct SqlStatement {
  std::string text;
  sql::StatementKind kind = sql::StatementKind::other;
};

/// Statements inside ```sql fenced blocks, split on top-level semicolons.
std::vector<SqlStatement> extract_sql_blocks(const ChatMessage& message);

/// True when some phrase occurs in `text` as whole words, ignoring case.
bool detect_termination(std::string_view text, const std::vector<std::string>& phrases);

struct MaterializeResult {
  std::string sql;
  ValidationRecord validation;
  std::string message;  // kViewDefined or the engine error
};

/// Creates each view in order with a savepoint and a one-row probe; failures
/// are rolled back and later definitions are still attempted.
std::vector<MaterializeResult> materialize_views(const std::vector<std::string>& view_definitions, Database& db);
std::vector<std::string> materialize_view_tool(const std::vector<std::string>& view_definitions, Database& db);

/// Tool definition offered to the Verifier.
json materialize_tool_schema();

/// System prompt for `role`. `wording` is the scoped schema text.
std::string render_prompt(Role role, std::string_view wording, const SessionMemory& memory);

/// Runs one Analyst/Critic/Verifier session. Validated views are registered
/// in `catalog` and folded into `memory`.
SessionOutcome run_session(const SessionConfig& config, SessionMemory& memory, ChatProvider& provider, Database& db,
                           const SchemaSnapshot& snapshot, Catalog& catalog, std::size_t session_id);

struct CampaignConfig {
  std::size_t sessions = 1;
  std::size_t budget = kDefaultBudget;
  std::size_t seed_count = kDefaultSeedCount;
  SessionConfig session;  // scope is filled per session
  std::optional<std::string> focus;
};

struct CampaignResult {
  Catalog catalog;
  SessionMemory memory;
  std::vector<SessionOutcome> outcomes;
};

/// Sessions named `session_<k>` (k from 1) run in order, each scoped by
/// sample_session_scope with the memory so far.
CampaignResult run_campaign(const SchemaSnapshot& snapshot, const SchemaGraph& graph, Gateway& gateway, Database& db,
                            const CampaignConfig& config, Catalog catalog = {}, SessionMemory memory = {});

}  // namespace semlayer
