#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tierroute {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration. Carries every problem found, not only the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// observe a truncated artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// One parsed line of a line-delimited JSON stream.
struct JsonLine {
  std::size_t line_number = 0;  // 1-based
  ordered_json value;
};

/// Parses line-delimited JSON. Blank lines are skipped; a malformed line
/// raises Error naming `source` and the line number.
std::vector<JsonLine> parse_jsonl(std::string_view text, std::string_view source);

template <typename Range>
std::string to_jsonl(const Range& values) {
  std::string out;
  for (const auto& v : values) {
    out += v.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
    out += '\n';
  }
  return out;
}

/// Hex-encoded SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace tierroute
