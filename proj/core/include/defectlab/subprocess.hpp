#pragma once

#include <string>
#include <utility>
#include <vector>

namespace defectlab {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs `argv` (PATH lookup on argv[0]) in `cwd` with extra environment
/// entries, capturing both output streams. Throws MiningError when the
/// program cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, const std::string& cwd = {},
                          const std::vector<std::pair<std::string, std::string>>& env = {},
                          const std::string& stdin_data = {});

/// A long-lived child with piped stdin/stdout (stderr discarded).
class PipedProcess {
 public:
  PipedProcess(const std::vector<std::string>& argv, const std::string& cwd);
  ~PipedProcess();
  PipedProcess(const PipedProcess&) = delete;
  PipedProcess& operator=(const PipedProcess&) = delete;

  void write(const std::string& data);
  std::string read_line();
  std::string read_exact(std::size_t n);

 private:
  int pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
  bool fill();
};

}  // namespace defectlab
