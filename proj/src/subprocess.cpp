#include "lmz/subprocess.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace lmz {

void Subprocess::unavailable(const std::string& what) const {
  fail(failure_kind_, what);
}

Subprocess::Subprocess(const std::vector<std::string>& argv,
                       std::chrono::milliseconds timeout, ErrorKind failure_kind)
    : timeout_(timeout), failure_kind_(failure_kind) {
  if (argv.empty()) fail(ErrorKind::invalid_argument, "empty command");
  // A child that dies mid-write must surface as an error, not SIGPIPE.
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2], out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) unavailable("pipe failed");
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    unavailable("pipe failed");
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    unavailable("cannot start '" + argv[0] + "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

Subprocess::~Subprocess() {
  try {
    close();
  } catch (...) {
  }
}

void Subprocess::write(std::span<const std::uint8_t> bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(to_child_, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      unavailable(std::string("write to child failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

void Subprocess::write_line(const std::string& line) {
  std::string framed = line;
  framed.push_back('\n');
  write({reinterpret_cast<const std::uint8_t*>(framed.data()), framed.size()});
}

void Subprocess::fill() {
  if (start_ > 0 && start_ == buffer_.size()) {
    buffer_.clear();
    start_ = 0;
  }
  pollfd pfd{from_child_, POLLIN, 0};
  for (;;) {
    const int ready = ::poll(&pfd, 1, static_cast<int>(timeout_.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready < 0) unavailable(std::string("poll failed: ") + std::strerror(errno));
    if (ready == 0) unavailable("child did not answer within the timeout");
    break;
  }
  std::uint8_t chunk[65536];
  ssize_t n;
  do {
    n = ::read(from_child_, chunk, sizeof chunk);
  } while (n < 0 && errno == EINTR);
  if (n < 0) unavailable(std::string("read from child failed: ") + std::strerror(errno));
  if (n == 0) unavailable("child closed its output");
  buffer_.insert(buffer_.end(), chunk, chunk + n);
}

std::string Subprocess::read_line() {
  for (;;) {
    for (std::size_t i = start_; i < buffer_.size(); ++i) {
      if (buffer_[i] == '\n') {
        std::string line(buffer_.begin() + static_cast<std::ptrdiff_t>(start_),
                         buffer_.begin() + static_cast<std::ptrdiff_t>(i));
        start_ = i + 1;
        return line;
      }
    }
    fill();
  }
}

std::vector<std::uint8_t> Subprocess::read_exact(std::size_t n) {
  while (buffer_.size() - start_ < n) fill();
  std::vector<std::uint8_t> out(buffer_.begin() + static_cast<std::ptrdiff_t>(start_),
                                buffer_.begin() + static_cast<std::ptrdiff_t>(start_ + n));
  start_ += n;
  return out;
}

int Subprocess::close() {
  if (pid_ <= 0) return 0;
  if (to_child_ >= 0) ::close(to_child_);
  to_child_ = -1;
  int status = 0;
  bool killed = false;
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) break;
    if (r < 0 && errno != EINTR) break;
    if (std::chrono::steady_clock::now() > deadline) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      killed = true;
      break;
    }
    ::usleep(1000);
  }
  if (from_child_ >= 0) ::close(from_child_);
  from_child_ = -1;
  pid_ = -1;
  if (killed) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> out;
  std::string current;
  bool in_word = false;
  char quote = 0;
  for (char c : command) {
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        current.push_back(c);
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) out.push_back(std::move(current));
      current.clear();
      in_word = false;
    } else {
      current.push_back(c);
      in_word = true;
    }
  }
  if (quote) fail(ErrorKind::invalid_argument, "unterminated quote in command");
  if (in_word) out.push_back(std::move(current));
  return out;
}

}  // namespace lmz
