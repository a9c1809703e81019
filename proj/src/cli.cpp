#include "semlayer/cli.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "semlayer/agent_sim.hpp"
#include "semlayer/er_builder.hpp"
#include "semlayer/errors.hpp"
#include "semlayer/metrics.hpp"
#include "semlayer/schema_graph.hpp"
#include "semlayer/schema_model.hpp"
#include "semlayer/view_catalog.hpp"

namespace semlayer {

namespace fs = std::filesystem;

namespace {

class InputError : public Error {
 public:
  using Error::Error;
};

class EmptyPrecondition : public Error {
 public:
  using Error::Error;
};

const std::set<std::string> kConfigKeys = {
    "version", "database",  "ddl",        "data",       "provider",          "transcript_dir", "sessions",
    "budget",  "seed_count", "max_turns", "verifier_mode", "include_samples", "infer_foreign_keys",
    "cluster_threshold", "trim", "focus", "output_dir"};

std::optional<std::string> optional_string(const json& doc, const char* key) {
  if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
  return doc[key].get<std::string>();
}

}  // namespace

// ---- RunConfig --------------------------------------------------------------------

RunConfig RunConfig::from_json(const json& doc, fs::path base_dir) {
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  if (doc.value("version", "") != kRunConfigVersion) throw ConfigError("run config must declare version runconfig.v1");
  for (const auto& [key, _] : doc.items()) {
    if (key == "api_key" || key == "key") {
      throw ConfigError("API keys are read from the environment only; name the variable in provider.api_key_env");
    }
    if (!kConfigKeys.count(key)) throw ConfigError("unknown run config field: " + key);
  }
  RunConfig c;
  c.base_dir = std::move(base_dir);
  try {
    c.database = optional_string(doc, "database");
    c.ddl = optional_string(doc, "ddl");
    c.data = optional_string(doc, "data");
    if (doc.contains("provider")) {
      c.provider = ProviderConfig::from_json(doc["provider"]);
      if (!c.provider.transcript_dir.empty()) c.transcript_dir = c.provider.transcript_dir.string();
      c.provider.transcript_dir.clear();
    }
    if (auto dir = optional_string(doc, "transcript_dir")) c.transcript_dir = dir;
    c.sessions = doc.value("sessions", c.sessions);
    c.budget = doc.value("budget", c.budget);
    c.seed_count = doc.value("seed_count", c.seed_count);
    c.max_turns = doc.value("max_turns", c.max_turns);
    c.verifier_mode = doc.value("verifier_mode", c.verifier_mode);
    c.include_samples = doc.value("include_samples", c.include_samples);
    c.infer_foreign_keys = doc.value("infer_foreign_keys", c.infer_foreign_keys);
    c.cluster_threshold = doc.value("cluster_threshold", c.cluster_threshold);
    c.trim = doc.value("trim", c.trim);
    c.focus = optional_string(doc, "focus");
    c.output_dir = doc.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(doc, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

json RunConfig::to_json() const {
  auto provider_echo = provider.to_json();
  provider_echo.erase("transcript_dir");
  return {{"version", kRunConfigVersion},
          {"database", database ? json(*database) : json()},
          {"ddl", ddl ? json(*ddl) : json()},
          {"data", data ? json(*data) : json()},
          {"provider", std::move(provider_echo)},
          {"transcript_dir", transcript_dir ? json(*transcript_dir) : json()},
          {"sessions", sessions},
          {"budget", budget},
          {"seed_count", seed_count},
          {"max_turns", max_turns},
          {"verifier_mode", verifier_mode},
          {"include_samples", include_samples},
          {"infer_foreign_keys", infer_foreign_keys},
          {"cluster_threshold", cluster_threshold},
          {"trim", trim},
          {"focus", focus ? json(*focus) : json()}};
}

void RunConfig::validate() const {
  if (sessions == 0) throw ConfigError("sessions must be at least 1");
  if (budget == 0) throw ConfigError("budget must be at least 1");
  if (seed_count == 0) throw ConfigError("seed_count must be at least 1");
  if (max_turns < 3) throw ConfigError("max_turns must be at least 3");
  verifier_mode_from_string(verifier_mode);
  if (!(cluster_threshold >= 0.0 && cluster_threshold <= 2.0)) throw ConfigError("cluster_threshold must lie in [0, 2]");
  if (!(trim >= 0.0 && trim <= 0.5)) throw ConfigError("trim must lie in [0, 0.5]");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (provider.kind == ProviderKind::replay) {
    if (!transcript_dir) throw ConfigError("the replay provider requires transcript_dir");
    if (!fs::is_directory(resolve(*transcript_dir))) {
      throw ConfigError("transcript directory not found: " + resolve(*transcript_dir).string());
    }
  }
  resolved_provider().validate();
}

fs::path RunConfig::resolve(const std::string& path) const {
  const fs::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

ProviderConfig RunConfig::resolved_provider() const {
  auto p = provider;
  if (transcript_dir) p.transcript_dir = resolve(*transcript_dir);
  return p;
}

// ---- pipeline ---------------------------------------------------------------------

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

struct Inputs {
  SchemaSnapshot snapshot;
  Database db = Database::in_memory();
};

class Pipeline {
 public:
  Pipeline(RunConfig config, std::string command, std::ostream& out)
      : config_(std::move(config)), command_(std::move(command)), out_(out), dir_(config_.out_dir()) {}

  const RunConfig& config() const { return config_; }
  const fs::path& dir() const { return dir_; }

  Gateway& gateway() {
    if (!gateway_) gateway_.emplace(config_.resolved_provider());
    return *gateway_;
  }

  Inputs& inputs() {
    if (inputs_) return *inputs_;
    const auto& c = config_;
    if (c.database.has_value() == c.ddl.has_value()) {
      throw InputError("exactly one of database or ddl must be given");
    }
    if (c.data && !c.ddl) throw InputError("data scripts are only loaded together with ddl");
    Inputs in;
    if (c.database) {
      const auto path = c.resolve(*c.database);
      if (!fs::is_regular_file(path)) throw InputError("database not found: " + path.string());
      auto source = Database::open_readonly(path);
      source.copy_to(in.db);
      in.snapshot = introspect_database(in.db);
    } else {
      const auto ddl = read_file(c.resolve(*c.ddl));
      in.snapshot = ingest_ddl(ddl);
      in.db.exec(ddl);
      if (c.data) in.db.exec(read_file(c.resolve(*c.data)));
    }
    if (c.infer_foreign_keys) in.snapshot = in.snapshot.with_foreign_keys(infer_foreign_keys(in.snapshot));
    if (c.include_samples) in.snapshot = attach_samples(in.snapshot, in.db);
    inputs_.emplace(std::move(in));
    return *inputs_;
  }

  void write(const std::string& relative, const std::string& contents) {
    write_file_atomic(dir_ / relative, contents);
    written_.push_back(relative);
  }

  Catalog load_catalog() {
    const auto path = dir_ / "catalog.json";
    if (!fs::is_regular_file(path)) throw EmptyPrecondition("no catalog at " + path.string() + "; run `semlayer run` first");
    return Catalog::load(path);
  }

  SchemaGraph graph() {
    auto g = build_graph(inputs().snapshot);
    return attach_features(g, gateway().embedder());
  }

  // ---- commands ----

  void ingest() {
    const auto& s = inputs().snapshot;
    write("snapshot.json", canonical_json(s.to_json()));
    out_ << "snapshot: " << s.tables().size() << " tables, " << s.column_count() << " columns, "
         << s.foreign_keys().size() << " foreign keys\n";
  }

  SchemaGraph write_graph() {
    ingest();
    auto g = graph();
    write("graph.json", canonical_json(g.to_json()));
    write("graph.dot", g.to_dot());
    out_ << "graph: " << g.size() << " nodes, " << connected_components(g).size() << " components\n";
    return g;
  }

  bool run() {
    const auto g = write_graph();
    auto& in = inputs();
    CampaignConfig cc;
    cc.sessions = config_.sessions;
    cc.budget = config_.budget;
    cc.seed_count = config_.seed_count;
    cc.focus = config_.focus;
    cc.session.max_turns = config_.max_turns;
    cc.session.verifier_mode = verifier_mode_from_string(config_.verifier_mode);
    cc.session.include_samples = config_.include_samples;
    auto result = run_campaign(in.snapshot, g, gateway(), in.db, cc, Catalog(snapshot_digest(in.snapshot)));

    const auto catalog_text = canonical_json(result.catalog.to_json());
    write("catalog.json", catalog_text);
    json sessions = json::array();
    bool provider_failed = false;
    for (const auto& o : result.outcomes) {
      const auto name = "sessions/session_" + std::to_string(o.session_id) + ".jsonl";
      const auto log = transcript_to_jsonl(o.transcript);
      write(name, log);
      auto entry = o.to_json();
      entry["transcript"] = name;
      entry["transcript_sha256"] = sha256_hex(log);
      sessions.push_back(std::move(entry));
      out_ << "session " << o.session_id << ": " << o.validated_views.size() << " validated, "
           << o.rejected_views.size() << " rejected, " << to_string(o.termination) << "\n";
      if (o.termination == TerminationReason::provider_error) {
        provider_failed = true;
        out_ << "  provider error: " << o.error << "\n";
      }
    }
    write("campaign.json", canonical_json({{"version", kCampaignVersion},
                                          {"config", config_.to_json()},
                                          {"sessions", std::move(sessions)},
                                          {"memory", result.memory.to_json()},
                                          {"catalog_sha256", sha256_hex(catalog_text)}}));
    out_ << "catalog: " << result.catalog.size() << " views\n";
    return !provider_failed;
  }

  RefinementReport metrics() {
    const auto catalog = load_catalog();
    const auto report = build_report(catalog, inputs().snapshot, config_.trim, config_.to_json());
    write("report.json", render_report(report, ReportFormat::json));
    write("report.md", render_report(report, ReportFormat::markdown));
    write("histogram.csv", histogram_csv(report.histogram));
    out_ << "coverage: " << format_percent(report.layer.original_columns_used, report.layer.schema_column_count)
         << " of " << report.layer.schema_column_count << " columns; " << report.layer.preserved_relations
         << " preserved, " << report.layer.new_relations << " new relations\n";
    return report;
  }

  ErModel er() {
    const auto catalog = load_catalog();
    if (catalog.empty()) throw EmptyPrecondition("the catalog has no views; nothing to model");
    gateway();
    const auto clusters = cluster_views(embed_views(catalog, gateway().embedder()), config_.cluster_threshold);
    const auto model = extract_er(clusters, catalog, gateway());
    write("er.json", render_er(model, ErFormat::json));
    write("er.md", render_er(model, ErFormat::markdown));
    write("er.dot", render_er(model, ErFormat::dot));
    out_ << "er: " << clusters.size() << " clusters, " << model.entities.size() << " entities, "
         << model.relationships.size() << " relationships, " << model.warnings.size() << " warnings\n";
    return model;
  }

  void report() {
    const auto r = metrics();
    std::string er_table = "No views in the catalog.\n";
    if (!load_catalog().empty()) er_table = render_er(er(), ErFormat::markdown);
    write("summary.md", "# Semantic layer summary\n\n## Schema and layer statistics\n\n" + render_stats_table(r) +
                            "\n## Entity-relationship model\n\n" + er_table);
  }

  /// Re-hashes every listed artifact, drops vanished ones, and stamps the time.
  void write_manifest() {
    if (written_.empty()) return;
    std::map<std::string, std::string> artifacts;
    const auto path = dir_ / "manifest.json";
    if (fs::is_regular_file(path)) {
      try {
        const auto old = json::parse(read_file(path));
        for (const auto& [k, _] : old.at("artifacts").items()) artifacts[k] = "";
      } catch (const std::exception&) {
      }
    }
    for (const auto& w : written_) artifacts[w] = "";
    json listed = json::object();
    for (const auto& [rel, _] : artifacts) {
      const auto file = dir_ / rel;
      if (fs::is_regular_file(file)) listed[rel] = sha256_hex(read_file(file));
    }
    auto echo = config_.to_json();
    echo["output_dir"] = config_.output_dir;
    write_file_atomic(path, canonical_json({{"version", kManifestVersion},
                                            {"tool_version", kToolVersion},
                                            {"command", command_},
                                            {"config", std::move(echo)},
                                            {"artifacts", std::move(listed)},
                                            {"generated_at", utc_timestamp()}}));
  }

 private:
  RunConfig config_;
  std::string command_;
  std::ostream& out_;
  fs::path dir_;
  std::optional<Gateway> gateway_;
  std::optional<Inputs> inputs_;
  std::vector<std::string> written_;
};

json manifest_artifacts(const fs::path& dir) { return json::parse(read_file(dir / "manifest.json")).at("artifacts"); }

int replay_check(const RunConfig& config, std::ostream& out) {
  if (config.provider.kind != ProviderKind::replay) throw ConfigError("replay-check requires the replay provider");
  std::vector<json> runs;
  std::vector<std::string> divergences;
  for (int k = 1; k <= 2; ++k) {
    auto c = config;
    c.output_dir = (config.out_dir() / "replay-check" / ("run_" + std::to_string(k))).string();
    fs::remove_all(c.out_dir());
    std::ostringstream quiet;
    Pipeline p(c, "replay-check", quiet);
    p.run();
    p.report();
    p.write_manifest();
    runs.push_back(manifest_artifacts(c.out_dir()));
    if (k == 1) {
      const auto campaign = json::parse(read_file(c.out_dir() / "campaign.json"));
      for (const auto& s : campaign.at("sessions"))
        for (const auto& d : s.at("divergences")) divergences.push_back(d.get<std::string>());
    }
  }
  bool same = runs[0] == runs[1];
  for (const auto& [path, digest] : runs[0].items()) {
    const bool match = runs[1].contains(path) && runs[1][path] == digest;
    out << (match ? "identical " : "DIFFERS   ") << path << " " << digest.get<std::string>() << "\n";
  }
  for (const auto& d : divergences) out << "divergence: " << d << "\n";
  out << (same && divergences.empty() ? "replay-check: pass\n" : "replay-check: FAIL\n");
  return same && divergences.empty() ? kExitOk : kExitFailure;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic-layer construction: schema ingestion, agent sessions, metrics and ER models.", "semlayer"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::string> out_dir, provider, focus;
  app.add_option("--config", config_path, "runconfig.v1 JSON file")->required();
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--provider", provider, "remote, replay or fallback (overrides provider.kind)");
  app.add_option("--focus", focus, "focus text for session scoping (overrides focus)");
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "write the schema snapshot"},
      {"graph", "write the schema graph as JSON and DOT"},
      {"run", "run a refinement campaign and write the view catalog"},
      {"metrics", "write the refinement report for the catalog"},
      {"er", "cluster catalog views and write the ER model"},
      {"report", "write metrics, the ER model and a combined summary"},
      {"replay-check", "run the replay pipeline twice and compare artifact digests"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  std::vector<const char*> argv;
  argv.push_back("semlayer");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  const auto command = app.get_subcommands().front()->get_name();

  try {
    auto config = RunConfig::load(config_path);
    if (out_dir) config.output_dir = fs::absolute(*out_dir).string();
    if (provider) config.provider.kind = provider_kind_from_string(*provider);
    if (focus) config.focus = *focus;
    config.validate();

    if (command == "replay-check") return replay_check(config, out);

    Pipeline p(config, command, out);
    int code = kExitOk;
    try {
      if (command != "ingest" && command != "metrics") p.gateway();
      if (command == "ingest") p.ingest();
      else if (command == "graph") p.write_graph();
      else if (command == "run") code = p.run() ? kExitOk : kExitProvider;
      else if (command == "metrics") p.metrics();
      else if (command == "er") p.er();
      else if (command == "report") p.report();
    } catch (...) {
      p.write_manifest();
      throw;
    }
    p.write_manifest();
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ProviderError& e) {
    err << "provider error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const EmptyPrecondition& e) {
    err << "nothing to do: " << e.what() << "\n";
    return kExitEmpty;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << " (statement " << e.statement_index() << ", offset " << e.offset() << ")\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace semlayer
