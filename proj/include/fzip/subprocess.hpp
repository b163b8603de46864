#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "fzip/byte_io.hpp"

namespace fzip {

// Splits a command template on whitespace. No shell is involved; quoting is
// not supported.
std::vector<std::string> split_command(std::string_view command);

struct ProcessResult {
  int exit_code = 0;
  Bytes out;
  std::string err;
};

// Runs `argv`, feeding `input` on stdin and collecting stdout/stderr. Throws
// ExternalTool when the program cannot be started or exceeds `timeout`.
ProcessResult run_process(const std::vector<std::string>& argv, ByteView input,
                          std::chrono::milliseconds timeout = std::chrono::minutes(10));

// A spawned child whose stdin/stdout are pipes owned by this object.
class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& argv);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  int write_fd() const noexcept { return to_child_; }
  int read_fd() const noexcept { return from_child_; }

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

}  // namespace fzip
