#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fzip {

// Every failure surfaced by the library carries one of these categories; the
// CLI maps them to exit codes and the one-line "category: detail" message.
enum class ErrorKind {
  Config,
  Io,
  Transport,
  CorruptStream,
  NotAnArchive,
  CorruptArchive,
  UnsupportedVersion,
  ModelMismatch,
  ExternalTool,
  RemotePredictor,
  UndefinedRatio,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) {
  throw Error(kind, detail);
}

}  // namespace fzip
