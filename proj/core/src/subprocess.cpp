#include "defectlab/subprocess.hpp"

#include "defectlab/errors.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace defectlab {
namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) throw MiningError("pipe failed", std::strerror(errno));
  }
  ~Pipe() {
    for (int f : fd)
      if (f >= 0) ::close(f);
  }
  int release(int i) {
    int f = fd[i];
    fd[i] = -1;
    return f;
  }
};

std::vector<std::string> merged_environment(
    const std::vector<std::pair<std::string, std::string>>& extra) {
  std::vector<std::string> env;
  for (char** e = environ; e && *e; ++e) {
    std::string entry(*e);
    bool overridden = false;
    for (const auto& [k, v] : extra)
      if (entry.compare(0, k.size() + 1, k + "=") == 0) overridden = true;
    if (!overridden) env.push_back(std::move(entry));
  }
  for (const auto& [k, v] : extra) env.push_back(k + "=" + v);
  return env;
}

std::vector<char*> c_strings(std::vector<std::string>& v) {
  std::vector<char*> out;
  for (auto& s : v) out.push_back(s.data());
  out.push_back(nullptr);
  return out;
}

int spawn(const std::vector<std::string>& argv, const std::string& cwd,
          const std::vector<std::pair<std::string, std::string>>& env, int in_fd, int out_fd,
          int err_fd) {
  // posix_spawn has no portable chdir action before glibc 2.29, so cwd is
  // applied through `git -C`-style callers or an env-less /bin/sh wrapper.
  std::vector<std::string> args = argv;
  if (!cwd.empty()) {
    args.insert(args.begin(), {"/bin/sh", "-c", "cd \"$0\" && exec \"$@\"", cwd});
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_fd, 0);
  posix_spawn_file_actions_adddup2(&actions, out_fd, 1);
  posix_spawn_file_actions_adddup2(&actions, err_fd, 2);
  auto envs = merged_environment(env);
  auto cenv = c_strings(envs);
  auto cargs = c_strings(args);
  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, cargs[0], &actions, nullptr, cargs.data(), cenv.data());
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw MiningError("cannot start " + argv[0], std::strerror(rc));
  return pid;
}

int wait_for(int pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return -1;
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const std::string& cwd,
                          const std::vector<std::pair<std::string, std::string>>& env,
                          const std::string& stdin_data) {
  Pipe in, out, err;
  const int pid = spawn(argv, cwd, env, in.fd[0], out.fd[1], err.fd[1]);
  ::close(in.release(0));
  ::close(out.release(1));
  ::close(err.release(1));

  ProcessResult result;
  std::size_t written = 0;
  int in_fd = in.release(1);
  if (stdin_data.empty()) {
    ::close(in_fd);
    in_fd = -1;
  }
  int fds[2] = {out.fd[0], err.fd[0]};
  std::string* sinks[2] = {&result.out, &result.err};
  bool open[2] = {true, true};
  char buf[65536];
  while (open[0] || open[1] || in_fd >= 0) {
    pollfd p[3];
    int n = 0;
    int map[3];
    for (int i = 0; i < 2; ++i)
      if (open[i]) {
        p[n] = {fds[i], POLLIN, 0};
        map[n++] = i;
      }
    if (in_fd >= 0) {
      p[n] = {in_fd, POLLOUT, 0};
      map[n++] = 2;
    }
    if (::poll(p, n, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int k = 0; k < n; ++k) {
      if (!p[k].revents) continue;
      if (map[k] == 2) {
        const ssize_t w = ::write(in_fd, stdin_data.data() + written, stdin_data.size() - written);
        if (w > 0) written += static_cast<std::size_t>(w);
        if (w <= 0 || written == stdin_data.size()) {
          ::close(in_fd);
          in_fd = -1;
        }
        continue;
      }
      const ssize_t r = ::read(p[k].fd, buf, sizeof buf);
      if (r > 0) {
        sinks[map[k]]->append(buf, static_cast<std::size_t>(r));
      } else if (r == 0 || errno != EINTR) {
        open[map[k]] = false;
      }
    }
  }
  result.exit_code = wait_for(pid);
  return result;
}

PipedProcess::PipedProcess(const std::vector<std::string>& argv, const std::string& cwd) {
  Pipe in, out;
  const int devnull = ::open("/dev/null", O_WRONLY | O_CLOEXEC);
  try {
    pid_ = spawn(argv, cwd, {}, in.fd[0], out.fd[1], devnull);
  } catch (...) {
    ::close(devnull);
    throw;
  }
  ::close(devnull);
  in_fd_ = in.release(1);
  out_fd_ = out.release(0);
}

PipedProcess::~PipedProcess() {
  if (in_fd_ >= 0) ::close(in_fd_);
  if (out_fd_ >= 0) ::close(out_fd_);
  if (pid_ > 0) wait_for(pid_);
}

void PipedProcess::write(const std::string& data) {
  std::size_t done = 0;
  // A dead child would otherwise raise SIGPIPE.
  struct sigaction ignore {}, old{};
  ignore.sa_handler = SIG_IGN;
  ::sigaction(SIGPIPE, &ignore, &old);
  while (done < data.size()) {
    const ssize_t w = ::write(in_fd_, data.data() + done, data.size() - done);
    if (w < 0) {
      if (errno == EINTR) continue;
      ::sigaction(SIGPIPE, &old, nullptr);
      throw MiningError("write to child failed", std::strerror(errno));
    }
    done += static_cast<std::size_t>(w);
  }
  ::sigaction(SIGPIPE, &old, nullptr);
}

bool PipedProcess::fill() {
  char buf[65536];
  for (;;) {
    const ssize_t r = ::read(out_fd_, buf, sizeof buf);
    if (r > 0) {
      buffer_.append(buf, static_cast<std::size_t>(r));
      return true;
    }
    if (r == 0) return false;
    if (errno != EINTR) return false;
  }
}

std::string PipedProcess::read_line() {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (!fill()) throw MiningError("child closed its output");
  }
}

std::string PipedProcess::read_exact(std::size_t n) {
  while (buffer_.size() < n)
    if (!fill()) throw MiningError("child closed its output");
  std::string data = buffer_.substr(0, n);
  buffer_.erase(0, n);
  return data;
}

}  // namespace defectlab
