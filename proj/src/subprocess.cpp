#include "fzip/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>

extern char** environ;

namespace fzip {

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) fail(ErrorKind::ExternalTool, std::string("pipe: ") + std::strerror(errno));
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

// posix_spawnp with stdin/stdout/stderr redirected. Returns the child pid.
pid_t spawn(const std::vector<std::string>& argv, int in_fd, int out_fd, int err_fd) {
  if (argv.empty()) fail(ErrorKind::ExternalTool, "empty command");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_fd, 0);
  posix_spawn_file_actions_adddup2(&actions, out_fd, 1);
  if (err_fd >= 0) posix_spawn_file_actions_adddup2(&actions, err_fd, 2);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = -1;
  const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) fail(ErrorKind::ExternalTool, "cannot start '" + argv[0] + "': " + std::strerror(rc));
  return pid;
}

int wait_child(pid_t pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

}  // namespace

std::vector<std::string> split_command(std::string_view command) {
  std::vector<std::string> out;
  std::istringstream in{std::string(command)};
  for (std::string word; in >> word;) out.push_back(word);
  return out;
}

ProcessResult run_process(const std::vector<std::string>& argv, ByteView input,
                          std::chrono::milliseconds timeout) {
  // A child that exits early must not kill us with SIGPIPE.
  static const bool ignore_sigpipe = [] { return ::signal(SIGPIPE, SIG_IGN) != SIG_ERR; }();
  (void)ignore_sigpipe;

  Pipe in, out, err;
  const pid_t pid = spawn(argv, in.fd[0], out.fd[1], err.fd[1]);
  ::close(in.release(0));
  ::close(out.release(1));
  ::close(err.release(1));
  int to_child = in.release(1);
  ::fcntl(to_child, F_SETFL, O_NONBLOCK);

  ProcessResult result;
  std::size_t written = 0;
  if (input.empty()) {
    ::close(to_child);
    to_child = -1;
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::uint8_t buf[1 << 16];
  bool out_open = true, err_open = true;
  while (out_open || err_open) {
    pollfd fds[3];
    int n = 0;
    int i_out = -1, i_err = -1, i_in = -1;
    if (out_open) { fds[n] = {out.fd[0], POLLIN, 0}; i_out = n++; }
    if (err_open) { fds[n] = {err.fd[0], POLLIN, 0}; i_err = n++; }
    if (to_child >= 0) { fds[n] = {to_child, POLLOUT, 0}; i_in = n++; }

    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      ::kill(pid, SIGKILL);
      wait_child(pid);
      if (to_child >= 0) ::close(to_child);
      fail(ErrorKind::ExternalTool, "'" + argv[0] + "' timed out");
    }
    if (::poll(fds, static_cast<nfds_t>(n), static_cast<int>(std::min<long long>(left.count(), 1000))) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    auto drain = [&](int idx, int fd, bool& open, auto&& sink) {
      if (idx < 0 || !(fds[idx].revents & (POLLIN | POLLHUP | POLLERR))) return;
      const ssize_t got = ::read(fd, buf, sizeof buf);
      if (got > 0) sink(got);
      else if (got == 0 || errno != EINTR) open = false;
    };
    drain(i_out, out.fd[0], out_open, [&](ssize_t got) { result.out.insert(result.out.end(), buf, buf + got); });
    drain(i_err, err.fd[0], err_open, [&](ssize_t got) { result.err.append(reinterpret_cast<char*>(buf), static_cast<std::size_t>(got)); });
    if (i_in >= 0 && (fds[i_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t put = ::write(to_child, input.data() + written, input.size() - written);
      if (put > 0) written += static_cast<std::size_t>(put);
      if (put < 0 && errno != EAGAIN && errno != EINTR) written = input.size();  // child closed stdin
      if (written == input.size()) {
        ::close(to_child);
        to_child = -1;
      }
    }
  }
  if (to_child >= 0) ::close(to_child);
  result.exit_code = wait_child(pid);
  return result;
}

ChildProcess::ChildProcess(const std::vector<std::string>& argv) {
  static const bool ignore_sigpipe = [] { return ::signal(SIGPIPE, SIG_IGN) != SIG_ERR; }();
  (void)ignore_sigpipe;
  Pipe in, out;
  pid_ = spawn(argv, in.fd[0], out.fd[1], -1);
  ::close(in.release(0));
  ::close(out.release(1));
  to_child_ = in.release(1);
  from_child_ = out.release(0);
}

ChildProcess::~ChildProcess() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    // Closing stdin asks a well-behaved server to exit; give it a moment.
    for (int i = 0; i < 50; ++i) {
      int status = 0;
      if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    wait_child(pid_);
  }
}

}  // namespace fzip
