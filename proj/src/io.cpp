#include "semlayer/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <sstream>

#include "semlayer/errors.hpp"

namespace semlayer {

std::string canonical_json(const json& doc) { return doc.dump(2) + "\n"; }

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json load_versioned_json(const std::filesystem::path& path, std::string_view version) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("version") || doc["version"] != version) {
    throw Error(path.string() + ": expected version \"" + std::string(version) + "\"");
  }
  return doc;
}

std::string format_percent(std::uint64_t numerator, std::uint64_t denominator) {
  if (denominator == 0) return "0.00%";
  // hundredths of a percent, rounded half up: floor((2 * n * 10000 + d) / (2 * d))
  const unsigned __int128 n = numerator;
  const unsigned __int128 d = denominator;
  const auto basis = static_cast<std::uint64_t>((2 * n * 10000 + d) / (2 * d));
  std::string frac = std::to_string(basis % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(basis / 100) + "." + frac + "%";
}

}  // namespace semlayer
