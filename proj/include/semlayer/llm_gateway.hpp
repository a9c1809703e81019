#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semlayer/io.hpp"

namespace semlayer {

enum class Role { system, analyst, critic, verifier, tool };

std::string_view to_string(Role role) noexcept;
/// Throws ProviderError for unknown labels.
Role role_from_string(std::string_view label);
/// "Analyst", "Critic", ...
std::string display_name(Role role);

struct ToolCall {
  std::string id;
  std::string name;
  json arguments = json::object();

  friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

struct ChatMessage {
  Role role = Role::analyst;
  std::string content;
  std::optional<ToolCall> tool_call;
  std::optional<json> tool_result;  // tool role only

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// One transcript.v1 line.
json message_to_json(const ChatMessage& m);
ChatMessage message_from_json(const json& line);
std::string transcript_to_jsonl(const std::vector<ChatMessage>& messages);

/// Recorded turns plus a cursor. Turns follow the session order: optional
/// system turns, Analyst/Critic turns, then Verifier tool calls each answered
/// by a tool turn.
struct ScriptedTranscript {
  std::vector<ChatMessage> turns;
  std::size_t cursor = 0;

  std::size_t remaining() const noexcept { return turns.size() - cursor; }
};

/// Parses transcript.v1 text. Errors name the source and 1-based line.
ScriptedTranscript parse_transcript(std::string_view text, std::string_view source = "<transcript>");
ScriptedTranscript load_transcript(const std::filesystem::path& path);

enum class ProviderKind { remote, replay, fallback };

std::string_view to_string(ProviderKind kind) noexcept;
ProviderKind provider_kind_from_string(std::string_view label);

struct ProviderConfig {
  ProviderKind kind = ProviderKind::replay;
  std::string endpoint;         // base URL, e.g. https://host/v1
  std::string model;
  std::string embedding_model;  // empty: embeddings come from the fallback embedder
  std::string api_key_env;      // name of the environment variable holding the key
  double temperature = 0.0;
  std::size_t max_retries = 3;
  double timeout_seconds = 60.0;
  std::size_t backoff_ms = 500;
  std::filesystem::path transcript_dir;  // replay
  std::size_t embedding_dimension = 256;

  /// Throws ConfigError when required fields for `kind` are missing.
  void validate() const;
  json to_json() const;  // never includes the key itself
  static ProviderConfig from_json(const json& doc);
};

struct ChatOptions {
  std::string system_prompt;
  /// OpenAI-style tool definitions offered to the speaker.
  json tools = json::array();
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  /// Next message spoken by `speaker` given the conversation so far.
  virtual ChatMessage chat(const std::vector<ChatMessage>& history, Role speaker, const ChatOptions& options = {}) = 0;
  /// Called after the orchestrator executed a tool call. Replay consumes the
  /// recorded tool turn here; live providers ignore it.
  virtual void acknowledge_tool_result(const ChatMessage& result) { (void)result; }
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// One vector per text, all of one dimension. Throws on an empty list.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

/// Serves a recorded transcript turn by turn.
class ReplayProvider final : public ChatProvider {
 public:
  explicit ReplayProvider(ScriptedTranscript transcript) : script_(std::move(transcript)) {}

  /// Throws SpeakerMismatch when the next recorded turn belongs to another
  /// role and TranscriptExhausted at the end of the script.
  ChatMessage chat(const std::vector<ChatMessage>& history, Role speaker, const ChatOptions& options = {}) override;
  void acknowledge_tool_result(const ChatMessage& result) override;

  const ScriptedTranscript& script() const noexcept { return script_; }
  /// Recorded tool results that differed from the executed ones.
  const std::vector<std::string>& divergences() const noexcept { return divergences_; }

 private:
  ScriptedTranscript script_;
  std::vector<std::string> divergences_;
};

inline constexpr std::uint64_t kFallbackSeed = 0x5EED;

/// Signed character 3-gram feature hashing, unit-normalized.
class FallbackEmbedder final : public EmbeddingProvider {
 public:
  explicit FallbackEmbedder(std::size_t dimension = 256, std::uint64_t seed = kFallbackSeed)
      : dimension_(dimension), seed_(seed) {}

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
  std::vector<double> embed_one(std::string_view text) const;
  std::size_t dimension() const noexcept { return dimension_; }

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

/// OpenAI-compatible chat-completions and embeddings client.
class RemoteProvider final : public ChatProvider, public EmbeddingProvider {
 public:
  /// Reads the API key from the environment variable named in the config;
  /// throws ConfigError when it is unset.
  explicit RemoteProvider(ProviderConfig config);

  ChatMessage chat(const std::vector<ChatMessage>& history, Role speaker, const ChatOptions& options = {}) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

  /// Requests issued so far, retries included.
  std::size_t attempts() const noexcept { return attempts_; }

 private:
  json post(const std::string& path, const json& body);

  ProviderConfig config_;
  std::string api_key_;
  std::string origin_;  // scheme://host[:port]
  std::string prefix_;  // path below the origin, no trailing slash
  std::size_t attempts_ = 0;
};

/// Request body for a chat completion (exposed for tests).
json chat_request_body(const ProviderConfig& config, const std::vector<ChatMessage>& history, Role speaker,
                       const ChatOptions& options);

/// Supplies chat providers per conversation (session or ER exchange) and a
/// shared embedder.
class Gateway {
 public:
  explicit Gateway(ProviderConfig config);

  const ProviderConfig& config() const noexcept { return config_; }
  /// Replay: the transcript `<transcript_dir>/<conversation>.jsonl` (missing
  /// file = empty script). Remote: the shared client. Fallback: throws.
  std::unique_ptr<ChatProvider> conversation(std::string_view conversation);
  EmbeddingProvider& embedder();

 private:
  ProviderConfig config_;
  std::shared_ptr<RemoteProvider> remote_;
  std::unique_ptr<EmbeddingProvider> fallback_;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace semlayer
