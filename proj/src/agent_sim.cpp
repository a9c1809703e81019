#include "semlayer/agent_sim.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "semlayer/errors.hpp"

namespace semlayer {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string first_line(std::string_view text) {
  text = trim(text);
  return std::string(text.substr(0, text.find('\n')));
}

/// Leading sentence of a Critic message, capped at 240 bytes.
std::string summarize_task(std::string_view text) {
  text = trim(text);
  auto end = text.find_first_of(".\n");
  std::string s(text.substr(0, end == std::string_view::npos ? text.size() : end + 1));
  if (s.size() > 240) s = s.substr(0, 237) + "...";
  return s;
}

}  // namespace

std::string_view to_string(VerifierMode mode) noexcept { return mode == VerifierMode::tool ? "tool" : "inline"; }

VerifierMode verifier_mode_from_string(std::string_view label) {
  if (label == "tool") return VerifierMode::tool;
  if (label == "inline") return VerifierMode::inline_sql;
  throw ConfigError("unknown verifier mode: " + std::string(label));
}

std::string_view to_string(TerminationReason reason) noexcept {
  switch (reason) {
    case TerminationReason::phrase: return "phrase";
    case TerminationReason::turn_limit: return "turn_limit";
    case TerminationReason::exhausted: return "exhausted";
    case TerminationReason::provider_error: return "provider_error";
  }
  return "turn_limit";
}

void SessionConfig::validate() const {
  if (max_turns < 3) throw ConfigError("max_turns must be at least 3");
  if (termination_phrases.empty()) throw ConfigError("at least one termination phrase is required");
  for (const auto& p : termination_phrases)
    if (trim(p).empty()) throw ConfigError("termination phrases must not be blank");
}

std::string SessionMemory::digest() const {
  if (defined_view_names.empty() && task_summaries.empty()) return "";
  std::ostringstream out;
  if (!defined_view_names.empty()) {
    out << "Views defined in earlier sessions (reuse them instead of redefining them):\n";
    for (const auto& n : defined_view_names) out << "- " << n << "\n";
  }
  if (!task_summaries.empty()) {
    out << "Tasks already explored (pick a different one):\n";
    for (const auto& t : task_summaries) out << "- " << t << "\n";
  }
  return out.str();
}

json SessionMemory::to_json() const {
  json cols = json::array();
  for (const auto& c : covered_columns) cols.push_back(c.qualified());
  return {{"defined_view_names", std::vector<std::string>(defined_view_names.begin(), defined_view_names.end())},
          {"task_summaries", task_summaries},
          {"covered_columns", std::move(cols)},
          {"session_count", session_count}};
}

json SessionOutcome::to_json() const {
  json validated = json::array(), rejected = json::array(), runs = json::array();
  for (const auto& e : validated_views) validated.push_back(e.view.name);
  for (const auto& r : rejected_views) rejected.push_back({{"sql", r.sql}, {"error", r.error}});
  for (const auto& q : queries) runs.push_back({{"sql", q.sql}, {"ok", q.ok}, {"rows", q.rows}, {"error", q.error}});
  return {{"session_id", session_id},
          {"scope", scope.to_json()},
          {"turns", transcript.size()},
          {"termination", to_string(termination)},
          {"error", error},
          {"proposed_views", proposed_views},
          {"validated_views", std::move(validated)},
          {"rejected_views", std::move(rejected)},
          {"queries", std::move(runs)},
          {"advisories", advisories},
          {"divergences", divergences}};
}

std::vector<SqlStatement> extract_sql_blocks(const ChatMessage& message) {
  std::vector<SqlStatement> out;
  std::string block;
  enum class State { outside, sql, other } state = State::outside;
  auto flush = [&] {
    for (const auto& st : sql::split_statements(block)) out.push_back({st.text, sql::classify_statement(st.text)});
    block.clear();
  };
  std::istringstream in(message.content);
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.rfind("```", 0) == 0) {
      if (state == State::outside) {
        state = lower(trim(t.substr(3))) == "sql" ? State::sql : State::other;
      } else {
        if (state == State::sql) flush();
        state = State::outside;
      }
      continue;
    }
    if (state == State::sql) block += line + "\n";
  }
  if (state == State::sql) flush();
  return out;
}

bool detect_termination(std::string_view text, const std::vector<std::string>& phrases) {
  const std::string hay = lower(text);
  for (const auto& p : phrases) {
    const std::string needle = lower(trim(p));
    if (needle.empty()) continue;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
      const bool left = pos == 0 || !word_char(hay[pos - 1]);
      const auto end = pos + needle.size();
      const bool right = end == hay.size() || !word_char(hay[end]);
      if (left && right) return true;
    }
  }
  return false;
}

std::vector<MaterializeResult> materialize_views(const std::vector<std::string>& view_definitions, Database& db) {
  std::vector<MaterializeResult> out;
  for (const auto& sql : view_definitions) {
    MaterializeResult r{sql, validate_view(db, sql), ""};
    r.message = r.validation.passed ? std::string(kViewDefined) : r.validation.error;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> materialize_view_tool(const std::vector<std::string>& view_definitions, Database& db) {
  std::vector<std::string> out;
  for (auto& r : materialize_views(view_definitions, db)) out.push_back(std::move(r.message));
  return out;
}

json materialize_tool_schema() {
  return json::array({{{"type", "function"},
                       {"function",
                        {{"name", kMaterializeTool},
                         {"description", "Create the given views in the database and report, per view, whether it was defined."},
                         {"parameters",
                          {{"type", "object"},
                           {"properties",
                            {{"view_definitions",
                              {{"type", "array"},
                               {"items", {{"type", "string"}}},
                               {"description", "CREATE VIEW statements, one per element"}}}}},
                           {"required", json::array({"view_definitions"})}}}}}}});
}

std::string render_prompt(Role role, std::string_view wording, const SessionMemory& memory) {
  std::ostringstream out;
  switch (role) {
    case Role::analyst:
      out << "You are the Analyst. Ask the Critic for an analysis task on the schema below, then answer it with "
             "SQL queries. Factor reusable intermediate results into database views defined with CREATE VIEW. "
             "Put every statement inside ```sql fenced blocks and use only the tables and views listed.\n\n";
      out << "Schema:\n" << wording;
      break;
    case Role::critic:
      out << "You are the Critic. Propose analysis tasks, review the Analyst's queries and suggest improvements or "
             "alternative formulations. In particular, suggest how the queries can be decomposed into small, "
             "descriptively named views that other tasks could reuse. When the work is complete, reply with a short "
             "closing remark ending in Goodbye.\n\n";
      out << "Schema:\n" << wording;
      break;
    case Role::verifier:
      out << "You are the Verifier. Call the " << kMaterializeTool
          << " tool once with every CREATE VIEW statement agreed in the conversation, one statement per element of "
             "view_definitions, in the order they were proposed. Do not invent new views.\n";
      break;
    case Role::system:
    case Role::tool:
      break;
  }
  if (role != Role::verifier) {
    if (const auto d = memory.digest(); !d.empty()) out << "\n" << d;
  }
  return out.str();
}

namespace {

class Session {
 public:
  Session(const SessionConfig& config, SessionMemory& memory, ChatProvider& provider, Database& db,
          const SchemaSnapshot& snapshot, Catalog& catalog, std::size_t id)
      : config_(config), memory_(memory), provider_(provider), db_(db), snapshot_(snapshot), catalog_(catalog) {
    out_.session_id = id;
    out_.scope = config.scope;
    wording_ = schema_wording(snapshot, config.scope.tables, config.include_samples);
  }

  SessionOutcome run() {
    dialogue();
    if (out_.termination != TerminationReason::provider_error) verify();
    remember();
    out_.transcript = history_;
    parse_transcript(transcript_to_jsonl(history_), "session_" + std::to_string(out_.session_id));
    return std::move(out_);
  }

 private:
  void dialogue() {
    Role speaker = Role::analyst;
    try {
      for (std::size_t turn = 0; turn + 1 < config_.max_turns; ++turn) {
        ChatOptions options;
        options.system_prompt = render_prompt(speaker, wording_, memory_);
        if (speaker == Role::critic && !feedback_.empty()) options.system_prompt += "\n" + feedback_;
        ChatMessage msg = provider_.chat(history_, speaker, options);
        msg.role = speaker;
        msg.tool_call.reset();
        history_.push_back(msg);
        if (speaker == Role::analyst) absorb(msg);
        if (speaker == Role::critic && !task_) task_ = summarize_task(msg.content);
        if (detect_termination(msg.content, config_.termination_phrases)) {
          out_.termination = TerminationReason::phrase;
          return;
        }
        speaker = speaker == Role::analyst ? Role::critic : Role::analyst;
      }
      out_.termination = TerminationReason::turn_limit;
    } catch (const TranscriptExhausted&) {
      out_.termination = TerminationReason::exhausted;
    } catch (const ProviderError& e) {
      out_.termination = TerminationReason::provider_error;
      out_.error = e.what();
    }
  }

  void absorb(const ChatMessage& msg) {
    feedback_.clear();
    for (const auto& st : extract_sql_blocks(msg)) {
      switch (st.kind) {
        case sql::StatementKind::create_view: {
          const auto name = view_name_of(st.text).value_or(st.text);
          auto it = std::find_if(pending_.begin(), pending_.end(),
                                 [&](const auto& p) { return iequals(view_name_of(p).value_or(p), name); });
          if (it != pending_.end()) *it = st.text;
          else pending_.push_back(st.text);
          break;
        }
        case sql::StatementKind::query:
          run_query(st.text);
          break;
        default:
          out_.advisories.push_back("ignored statement outside the view protocol: " + first_line(st.text));
      }
    }
    if (!feedback_.empty()) feedback_ = "Execution results of the Analyst's latest queries:\n" + feedback_;
  }

  void run_query(const std::string& text) {
    QueryRun q{text, false, 0, ""};
    try {
      if (!db_.is_read_only(text)) {
        q.error = "statement is not read-only; not executed";
      } else {
        q.rows = db_.query(text, config_.query_preview_rows).rows.size();
        q.ok = true;
      }
    } catch (const DatabaseError& e) {
      q.error = e.what();
    }
    feedback_ += "- " + (q.ok ? "ok, " + std::to_string(q.rows) + " preview row(s)" : "error: " + q.error) + ": " +
                 first_line(text) + "\n";
    out_.queries.push_back(std::move(q));
  }

  void verify() {
    std::vector<std::string> defs = pending_;
    ToolCall call{"inline_" + std::to_string(out_.session_id), std::string(kMaterializeTool), json::object()};
    bool asked = false;
    if (config_.verifier_mode == VerifierMode::tool) {
      ChatOptions options{render_prompt(Role::verifier, wording_, memory_) + pending_listing(), materialize_tool_schema()};
      try {
        ChatMessage msg = provider_.chat(history_, Role::verifier, options);
        msg.role = Role::verifier;
        if (msg.tool_call && msg.tool_call->name == kMaterializeTool) {
          const auto& args = msg.tool_call->arguments;
          if (!args.contains("view_definitions") || !args["view_definitions"].is_array()) {
            out_.advisories.push_back("verifier tool call without a view_definitions array; using the proposed views");
          } else {
            defs.clear();
            for (const auto& d : args["view_definitions"]) {
              if (d.is_string()) defs.push_back(d.get<std::string>());
            }
            call = *msg.tool_call;
            history_.push_back(msg);
            asked = true;
          }
        } else if (msg.tool_call) {
          out_.advisories.push_back("verifier called unknown tool " + msg.tool_call->name + "; using the proposed views");
        }
        if (!asked && !msg.content.empty()) {
          msg.tool_call.reset();
          history_.push_back(msg);
        }
      } catch (const TranscriptExhausted&) {
      } catch (const SpeakerMismatch& e) {
        out_.advisories.push_back(std::string("no scripted verifier turn, materializing the proposed views: ") + e.what());
      } catch (const ProviderError& e) {
        out_.termination = TerminationReason::provider_error;
        out_.error = e.what();
        return;
      }
    }
    if (!asked) {
      if (defs.empty()) return;
      call.arguments = {{"view_definitions", defs}};
      history_.push_back({Role::verifier, "", call, std::nullopt});
    }

    json results = json::array();
    for (const auto& d : defs) results.push_back(admit(d));
    ChatMessage tool{Role::tool, "", ToolCall{call.id, call.name, json::object()}, results};
    history_.push_back(tool);
    provider_.acknowledge_tool_result(tool);
    if (auto* replay = dynamic_cast<ReplayProvider*>(&provider_)) out_.divergences = replay->divergences();
  }

  std::string pending_listing() const {
    if (pending_.empty()) return "\nNo CREATE VIEW statements were proposed.\n";
    std::string s = "\nProposed CREATE VIEW statements:\n";
    for (const auto& p : pending_) s += "```sql\n" + p + ";\n```\n";
    return s;
  }

  /// Materializes one definition and registers it; returns the tool result text.
  std::string admit(const std::string& raw) {
    const auto parts = sql::split_statements(raw);
    if (parts.size() != 1) {
      out_.proposed_views.push_back(raw);
      return reject(raw, "expected exactly one CREATE VIEW statement");
    }
    std::string text = parts.front().text;
    const auto name = view_name_of(text);
    if (!name || sql::classify_statement(text) != sql::StatementKind::create_view) {
      out_.proposed_views.push_back(text);
      return reject(text, "not a CREATE VIEW statement");
    }
    const auto fresh = catalog_.fresh_name(*name, taken());
    if (!iequals(fresh, *name)) {
      text = rename_view(text, fresh);
      out_.advisories.push_back("view " + *name + " already exists; defined as " + fresh);
    }
    batch_names_.insert(fresh);
    out_.proposed_views.push_back(text);

    auto validation = validate_view(db_, text);
    if (!validation.passed) return reject(text, validation.error);
    CatalogEntry entry;
    try {
      auto [view, lineage] = resolve_lineage(parse_view(text), snapshot_, catalog_);
      view.sql = text;
      entry.view = std::move(view);
      entry.lineage = std::move(lineage);
    } catch (const Error& e) {
      drop(fresh);
      return reject(text, std::string("lineage: ") + e.what());
    }
    entry.session_id = out_.session_id;
    validation.sequence = catalog_.size() + 1;
    entry.validation = validation;
    try {
      catalog_.register_entry(entry);
    } catch (const CatalogError& e) {
      drop(fresh);
      return reject(text, e.what());
    }
    out_.validated_views.push_back(std::move(entry));
    return std::string(kViewDefined);
  }

  NameSet taken() const {
    NameSet t = memory_.defined_view_names;
    t.insert(batch_names_.begin(), batch_names_.end());
    return t;
  }

  void drop(const std::string& name) { db_.exec("DROP VIEW IF EXISTS " + quote_identifier(name)); }

  std::string reject(const std::string& text, const std::string& error) {
    out_.rejected_views.push_back({text, error});
    return error;
  }

  void remember() {
    for (const auto& e : out_.validated_views) {
      memory_.defined_view_names.insert(e.view.name);
      for (const auto& c : e.lineage.coverage()) memory_.covered_columns.insert(c);
    }
    if (task_) memory_.task_summaries.push_back(*task_);
    ++memory_.session_count;
  }

  const SessionConfig& config_;
  SessionMemory& memory_;
  ChatProvider& provider_;
  Database& db_;
  const SchemaSnapshot& snapshot_;
  Catalog& catalog_;
  SessionOutcome out_;
  std::string wording_;
  std::vector<ChatMessage> history_;
  std::vector<std::string> pending_;
  std::string feedback_;
  std::optional<std::string> task_;
  NameSet batch_names_;
};

}  // namespace

SessionOutcome run_session(const SessionConfig& config, SessionMemory& memory, ChatProvider& provider, Database& db,
                           const SchemaSnapshot& snapshot, Catalog& catalog, std::size_t session_id) {
  config.validate();
  for (const auto& t : config.scope.tables) {
    if (!snapshot.find_table(t)) throw SchemaError("scope table not in the schema: " + t);
    if (!db.object_exists(t, "table")) throw DatabaseError("scope table missing from the database: " + t);
  }
  return Session(config, memory, provider, db, snapshot, catalog, session_id).run();
}

CampaignResult run_campaign(const SchemaSnapshot& snapshot, const SchemaGraph& graph, Gateway& gateway, Database& db,
                            const CampaignConfig& config, Catalog catalog, SessionMemory memory) {
  if (config.sessions == 0) throw ConfigError("a campaign needs at least one session");
  config.session.validate();
  if (catalog.empty() && catalog.snapshot_digest().empty()) catalog = Catalog(snapshot_digest(snapshot));
  CampaignResult result{std::move(catalog), std::move(memory), {}};
  if (graph.empty()) throw GraphError("cannot run a campaign over an empty schema");
  const SchemaGraph featured = graph.has_features() ? graph : attach_features(graph, gateway.embedder());

  for (std::size_t k = 1; k <= config.sessions; ++k) {
    ScopeRequest request;
    request.covered = result.memory.covered_columns;
    request.rotation = result.memory.session_count;
    request.budget = config.budget;
    request.seed_count = config.seed_count;
    request.focus_override = config.focus;
    SessionConfig session = config.session;
    session.scope = sample_session_scope(featured, request, gateway.embedder());
    auto provider = gateway.conversation("session_" + std::to_string(k));
    try {
      result.outcomes.push_back(run_session(session, result.memory, *provider, db, snapshot, result.catalog, k));
    } catch (const Error& e) {
      SessionOutcome failed;
      failed.session_id = k;
      failed.scope = session.scope;
      failed.termination = TerminationReason::provider_error;
      failed.error = e.what();
      ++result.memory.session_count;
      result.outcomes.push_back(std::move(failed));
    }
  }
  return result;
}

}  // namespace semlayer
