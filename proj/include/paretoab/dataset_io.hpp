#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "paretoab/session.hpp"

namespace paretoab {

/// Raised for malformed dataset files; `line()` is 1-based, 0 for file-level errors.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct ParseStats {
  std::size_t sessions = 0;
  std::size_t orphan_orders = 0;
};

// Line-delimited JSON, one session per line:
//   {"session_id": 1, "events": [{"item": 3, "action": "click", "ts": 10}, ...]}
// with an optional first-line header {"catalog_size": N} (optionally "split_ts").
Dataset read_sessions(std::istream& in, ParseStats* stats = nullptr);
Dataset parse_sessions(const std::filesystem::path& path, ParseStats* stats = nullptr);

void write_sessions(std::ostream& out, const Dataset& d);
void write_sessions(const std::filesystem::path& path, const Dataset& d);

}  // namespace paretoab
