#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <sys/types.h>

namespace tierroute {

/// A child process with piped stdin/stdout. stderr is inherited.
/// The destructor kills and reaps the child if it is still running.
class Subprocess {
 public:
  /// Spawns argv[0] (resolved through PATH). Throws Error on failure.
  explicit Subprocess(const std::vector<std::string>& argv);
  ~Subprocess();

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;
  Subprocess(Subprocess&& other) noexcept;
  Subprocess& operator=(Subprocess&& other) noexcept;

  /// Returns false if the pipe is closed (child gone).
  bool write_all(std::string_view data);
  void close_stdin();

  enum class ReadStatus { line, timeout, eof };
  struct ReadResult {
    ReadStatus status;
    std::string line;  // without the trailing newline
  };
  /// Reads one '\n'-terminated line, waiting at most `timeout`.
  ReadResult read_line(std::chrono::milliseconds timeout);

  /// Reads stdout until EOF or the deadline. Returns nullopt on timeout.
  std::optional<std::string> read_all(std::chrono::milliseconds timeout);

  void kill();
  /// Waits for exit and returns the exit status (128+signal when signalled).
  int wait();
  bool running() const { return pid_ > 0; }

 private:
  void reset() noexcept;

  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string buffer_;
  bool eof_ = false;
};

}  // namespace tierroute
