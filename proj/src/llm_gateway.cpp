#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "semlayer/llm_gateway.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "semlayer/errors.hpp"

namespace semlayer {

namespace {

constexpr std::string_view kRoleLabels[] = {"system", "analyst", "critic", "verifier", "tool"};
constexpr std::string_view kProviderLabels[] = {"remote", "replay", "fallback"};

}  // namespace

std::string_view to_string(Role role) noexcept { return kRoleLabels[static_cast<int>(role)]; }

Role role_from_string(std::string_view label) {
  for (int i = 0; i < 5; ++i)
    if (kRoleLabels[i] == label) return static_cast<Role>(i);
  throw ProviderError("unknown role label: " + std::string(label));
}

std::string display_name(Role role) {
  std::string s(to_string(role));
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string_view to_string(ProviderKind kind) noexcept { return kProviderLabels[static_cast<int>(kind)]; }

ProviderKind provider_kind_from_string(std::string_view label) {
  for (int i = 0; i < 3; ++i)
    if (kProviderLabels[i] == label) return static_cast<ProviderKind>(i);
  throw ConfigError("unknown provider kind: " + std::string(label));
}

// ---- transcript.v1 --------------------------------------------------------------

json message_to_json(const ChatMessage& m) {
  json line = {{"speaker", to_string(m.role)}, {"content", m.content}};
  if (m.tool_call) {
    line["tool_call"] = {{"name", m.tool_call->name}, {"arguments", m.tool_call->arguments}};
    if (!m.tool_call->id.empty()) line["tool_call"]["id"] = m.tool_call->id;
  }
  if (m.tool_result) line["tool_result"] = *m.tool_result;
  return line;
}

ChatMessage message_from_json(const json& line) {
  if (!line.is_object()) throw ProviderError("turn is not a JSON object");
  ChatMessage m;
  if (!line.contains("speaker") || !line["speaker"].is_string()) throw ProviderError("turn has no speaker");
  m.role = role_from_string(line["speaker"].get<std::string>());
  if (line.contains("content")) {
    if (!line["content"].is_string() && !line["content"].is_null()) throw ProviderError("content must be a string");
    if (line["content"].is_string()) m.content = line["content"].get<std::string>();
  }
  if (line.contains("tool_call") && !line["tool_call"].is_null()) {
    const auto& tc = line["tool_call"];
    if (!tc.is_object() || !tc.contains("name") || !tc["name"].is_string()) {
      throw ProviderError("tool_call needs a name");
    }
    ToolCall call;
    call.name = tc["name"].get<std::string>();
    call.id = tc.value("id", "");
    call.arguments = tc.value("arguments", json::object());
    m.tool_call = std::move(call);
  }
  if (line.contains("tool_result") && !line["tool_result"].is_null()) m.tool_result = line["tool_result"];
  if (m.role == Role::tool && !m.tool_result) throw ProviderError("tool turn carries no tool_result");
  if (m.role != Role::tool && m.content.empty() && !m.tool_call) throw ProviderError("turn has neither content nor tool_call");
  return m;
}

std::string transcript_to_jsonl(const std::vector<ChatMessage>& messages) {
  std::string out;
  for (const auto& m : messages) out += message_to_json(m).dump() + "\n";
  return out;
}

ScriptedTranscript parse_transcript(std::string_view text, std::string_view source) {
  ScriptedTranscript t;
  enum class Phase { opening, dialogue, tools } phase = Phase::opening;
  bool awaiting_result = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (raw.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    auto fail = [&](const std::string& msg) -> ProviderError {
      return ProviderError(std::string(source) + ":" + std::to_string(line_no) + ": " + msg);
    };
    ChatMessage m;
    try {
      m = message_from_json(json::parse(raw));
    } catch (const json::exception& e) {
      throw fail(std::string("malformed JSON: ") + e.what());
    } catch (const ProviderError& e) {
      throw fail(e.what());
    }
    switch (m.role) {
      case Role::system:
        if (phase != Phase::opening) throw fail("system turn after the conversation started");
        break;
      case Role::analyst:
      case Role::critic:
        if (phase == Phase::tools) throw fail(std::string(to_string(m.role)) + " turn after the verifier phase began");
        phase = Phase::dialogue;
        break;
      case Role::verifier:
        if (awaiting_result) throw fail("verifier turn while a tool result is pending");
        phase = Phase::tools;
        awaiting_result = m.tool_call.has_value();
        break;
      case Role::tool:
        if (!awaiting_result) throw fail("tool turn without a preceding verifier tool_call");
        awaiting_result = false;
        break;
    }
    t.turns.push_back(std::move(m));
    if (end == text.size()) break;
  }
  return t;
}

ScriptedTranscript load_transcript(const std::filesystem::path& path) {
  return parse_transcript(read_file(path), path.string());
}

// ---- config -----------------------------------------------------------------------

void ProviderConfig::validate() const {
  switch (kind) {
    case ProviderKind::remote:
      if (endpoint.empty()) throw ConfigError("remote provider requires an endpoint");
      if (model.empty()) throw ConfigError("remote provider requires a model");
      break;
    case ProviderKind::replay:
      if (transcript_dir.empty()) throw ConfigError("replay provider requires a transcript directory");
      break;
    case ProviderKind::fallback:
      break;
  }
  if (embedding_dimension == 0) throw ConfigError("embedding dimension must be positive");
}

json ProviderConfig::to_json() const {
  return {{"kind", to_string(kind)},
          {"endpoint", endpoint},
          {"model", model},
          {"embedding_model", embedding_model},
          {"api_key_env", api_key_env},
          {"temperature", temperature},
          {"max_retries", max_retries},
          {"timeout_seconds", timeout_seconds},
          {"backoff_ms", backoff_ms},
          {"transcript_dir", transcript_dir.string()},
          {"embedding_dimension", embedding_dimension}};
}

ProviderConfig ProviderConfig::from_json(const json& doc) {
  ProviderConfig c;
  try {
    if (doc.contains("api_key") || doc.contains("key")) {
      throw ConfigError("API keys are read from the environment only; name the variable in api_key_env");
    }
    c.kind = provider_kind_from_string(doc.value("kind", std::string(to_string(c.kind))));
    c.endpoint = doc.value("endpoint", c.endpoint);
    c.model = doc.value("model", c.model);
    c.embedding_model = doc.value("embedding_model", c.embedding_model);
    c.api_key_env = doc.value("api_key_env", c.api_key_env);
    c.temperature = doc.value("temperature", c.temperature);
    c.max_retries = doc.value("max_retries", c.max_retries);
    c.timeout_seconds = doc.value("timeout_seconds", c.timeout_seconds);
    c.backoff_ms = doc.value("backoff_ms", c.backoff_ms);
    c.transcript_dir = doc.value("transcript_dir", std::string());
    c.embedding_dimension = doc.value("embedding_dimension", c.embedding_dimension);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed provider config: ") + e.what());
  }
  return c;
}

// ---- replay -----------------------------------------------------------------------

ChatMessage ReplayProvider::chat(const std::vector<ChatMessage>&, Role speaker, const ChatOptions&) {
  while (script_.cursor < script_.turns.size() && script_.turns[script_.cursor].role == Role::system) ++script_.cursor;
  if (script_.cursor >= script_.turns.size()) {
    throw TranscriptExhausted("replay transcript exhausted after " + std::to_string(script_.turns.size()) + " turns");
  }
  const auto& next = script_.turns[script_.cursor];
  if (next.role != speaker) {
    throw SpeakerMismatch("replay turn " + std::to_string(script_.cursor + 1) + " is spoken by " +
                          std::string(to_string(next.role)) + ", but " + std::string(to_string(speaker)) +
                          " was asked to speak");
  }
  ++script_.cursor;
  return next;
}

void ReplayProvider::acknowledge_tool_result(const ChatMessage& result) {
  if (script_.cursor >= script_.turns.size() || script_.turns[script_.cursor].role != Role::tool) return;
  const auto& recorded = script_.turns[script_.cursor];
  if (recorded.tool_result != result.tool_result) {
    divergences_.push_back("turn " + std::to_string(script_.cursor + 1) + ": recorded " +
                           recorded.tool_result.value_or(json()).dump() + ", executed " +
                           result.tool_result.value_or(json()).dump());
  }
  ++script_.cursor;
}

// ---- fallback embedder --------------------------------------------------------------

std::vector<double> FallbackEmbedder::embed_one(std::string_view text) const {
  std::string padded = "^";
  for (char c : text) padded += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  padded += "$";
  std::vector<double> v(dimension_, 0.0);
  auto add = [&](std::string_view gram) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed_;
    for (unsigned char c : gram) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
  };
  if (padded.size() < 3) add(padded);
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) add(std::string_view(padded).substr(i, 3));
  double norm = 0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0) {
    // colliding grams cancelled out; fall back to the first axis
    v[0] = 1.0;
    return v;
  }
  for (double& x : v) x /= norm;
  return v;
}

std::vector<std::vector<double>> FallbackEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw ProviderError("embed requires at least one text");
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine of vectors with different dimensions");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---- remote -----------------------------------------------------------------------

json chat_request_body(const ProviderConfig& config, const std::vector<ChatMessage>& history, Role speaker,
                       const ChatOptions& options) {
  json messages = json::array();
  if (!options.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", options.system_prompt}});
  for (const auto& m : history) {
    if (m.role == Role::system) {
      messages.push_back({{"role", "system"}, {"content", m.content}});
    } else if (m.role == Role::tool) {
      json msg = {{"role", "tool"}, {"content", m.tool_result.value_or(json()).dump()}};
      if (m.tool_call) msg["tool_call_id"] = m.tool_call->id;
      messages.push_back(std::move(msg));
    } else if (m.role == speaker) {
      json msg = {{"role", "assistant"}, {"content", m.content}};
      if (m.tool_call) {
        msg["tool_calls"] = json::array({{{"id", m.tool_call->id},
                                          {"type", "function"},
                                          {"function", {{"name", m.tool_call->name}, {"arguments", m.tool_call->arguments.dump()}}}}});
      }
      messages.push_back(std::move(msg));
    } else {
      messages.push_back({{"role", "user"}, {"content", display_name(m.role) + ": " + m.content}});
    }
  }
  json body = {{"model", config.model}, {"messages", std::move(messages)}, {"temperature", config.temperature}};
  if (!options.tools.empty()) body["tools"] = options.tools;
  return body;
}

RemoteProvider::RemoteProvider(ProviderConfig config) : config_(std::move(config)) {
  config_.validate();
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) throw ConfigError("environment variable " + config_.api_key_env + " is not set");
    api_key_ = key;
  }
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + config_.endpoint);
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  origin_ = config_.endpoint.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : config_.endpoint.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

json RemoteProvider::post(const std::string& path, const json& body) {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const std::string payload = body.dump();
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms << (attempt - 1)));
    ++attempts_;
    auto res = client.Post(prefix_ + path, headers, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      try {
        return json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw ProviderError(std::string("endpoint returned malformed JSON: ") + e.what());
      }
    }
    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500);
    if (res->status >= 400 && res->status < 500 && res->status != 408 && res->status != 429) break;
  }
  throw ProviderError("endpoint " + config_.endpoint + path + " failed after " + std::to_string(attempts_) +
                      " attempt(s): " + last_error);
}

ChatMessage RemoteProvider::chat(const std::vector<ChatMessage>& history, Role speaker, const ChatOptions& options) {
  const auto reply = post("/chat/completions", chat_request_body(config_, history, speaker, options));
  try {
    const auto& msg = reply.at("choices").at(0).at("message");
    ChatMessage out;
    out.role = speaker;
    if (msg.contains("content") && msg["content"].is_string()) out.content = msg["content"].get<std::string>();
    if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty()) {
      const auto& tc = msg["tool_calls"][0];
      ToolCall call;
      call.id = tc.value("id", "");
      call.name = tc.at("function").at("name").get<std::string>();
      const auto& args = tc.at("function").at("arguments");
      call.arguments = args.is_string() ? json::parse(args.get<std::string>()) : args;
      out.tool_call = std::move(call);
    }
    if (out.content.empty() && !out.tool_call) throw ProviderError("endpoint returned an empty message");
    return out;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unexpected chat completion shape: ") + e.what());
  }
}

std::vector<std::vector<double>> RemoteProvider::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw ProviderError("embed requires at least one text");
  const auto reply = post("/embeddings", {{"model", config_.embedding_model}, {"input", texts}});
  try {
    std::vector<std::vector<double>> out(texts.size());
    for (const auto& item : reply.at("data")) {
      const auto index = item.at("index").get<std::size_t>();
      if (index >= out.size()) throw ProviderError("embedding index out of range");
      out[index] = item.at("embedding").get<std::vector<double>>();
    }
    for (const auto& v : out)
      if (v.empty() || v.size() != out.front().size()) throw ProviderError("embeddings have inconsistent dimensions");
    return out;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unexpected embeddings shape: ") + e.what());
  }
}

// ---- gateway ------------------------------------------------------------------------

Gateway::Gateway(ProviderConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.kind == ProviderKind::remote) remote_ = std::make_shared<RemoteProvider>(config_);
  fallback_ = std::make_unique<FallbackEmbedder>(config_.embedding_dimension);
}

namespace {

class SharedRemote final : public ChatProvider {
 public:
  explicit SharedRemote(std::shared_ptr<RemoteProvider> p) : p_(std::move(p)) {}
  ChatMessage chat(const std::vector<ChatMessage>& history, Role speaker, const ChatOptions& options) override {
    return p_->chat(history, speaker, options);
  }

 private:
  std::shared_ptr<RemoteProvider> p_;
};

}  // namespace

std::unique_ptr<ChatProvider> Gateway::conversation(std::string_view name) {
  switch (config_.kind) {
    case ProviderKind::remote:
      return std::make_unique<SharedRemote>(remote_);
    case ProviderKind::replay: {
      const auto path = config_.transcript_dir / (std::string(name) + ".jsonl");
      if (!std::filesystem::exists(path)) return std::make_unique<ReplayProvider>(ScriptedTranscript{});
      return std::make_unique<ReplayProvider>(load_transcript(path));
    }
    case ProviderKind::fallback:
      break;
  }
  throw ProviderError("the fallback provider supplies embeddings only; chat is unavailable");
}

EmbeddingProvider& Gateway::embedder() {
  if (remote_ && !config_.embedding_model.empty()) return *remote_;
  return *fallback_;
}

}  // namespace semlayer
