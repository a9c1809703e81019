#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semlayer/io.hpp"
#include "semlayer/llm_gateway.hpp"

namespace semlayer {

inline constexpr std::string_view kRunConfigVersion = "runconfig.v1";
inline constexpr std::string_view kManifestVersion = "manifest.v1";
inline constexpr std::string_view kToolVersion = "semlayer 0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInput = 2,
  kExitConfig = 3,
  kExitEmpty = 4,
  kExitProvider = 5,
};

/// Paths are kept as written; relative ones resolve against `base_dir`.
struct RunConfig {
  std::filesystem::path base_dir = ".";
  std::optional<std::string> database;
  std::optional<std::string> ddl;
  std::optional<std::string> data;  // SQL script loaded after the DDL
  ProviderConfig provider;          // transcript_dir lives in `transcript_dir`
  std::optional<std::string> transcript_dir;
  std::size_t sessions = 1;
  std::size_t budget = 8;
  std::size_t seed_count = 4;
  std::size_t max_turns = 12;
  std::string verifier_mode = "tool";
  bool include_samples = false;
  bool infer_foreign_keys = false;
  double cluster_threshold = 0.35;
  double trim = 0.01;
  std::optional<std::string> focus;
  std::string output_dir = "out";

  /// Throws ConfigError.
  static RunConfig from_json(const json& doc, std::filesystem::path base_dir = ".");
  static RunConfig load(const std::filesystem::path& path);
  /// Echo written into artifacts: no key, no output directory.
  json to_json() const;
  /// Throws ConfigError on out-of-range knobs or replay without transcripts.
  void validate() const;

  std::filesystem::path resolve(const std::string& path) const;
  std::filesystem::path out_dir() const { return resolve(output_dir); }
  ProviderConfig resolved_provider() const;
};

/// Entry point shared by the `semlayer` executable and the tests.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semlayer
