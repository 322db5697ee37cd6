// Copyright 2026 The trdfew Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <stdlib.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "trd/backend.h"
#include "trd/error.h"

namespace trd {
namespace {

class UniqueFd {
 public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) : fd_(fd) {}
  UniqueFd(UniqueFd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  UniqueFd& operator=(UniqueFd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  UniqueFd(const UniqueFd&) = delete;
  UniqueFd& operator=(const UniqueFd&) = delete;
  ~UniqueFd() { reset(); }

  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

struct ProcessOutput {
  int exit_status = 0;  // exit code, or 128 + signal
  std::string stdout_data;
};

// Runs `sh -c command`, feeding `input` on stdin and collecting stdout.
// stdin is a socket so writes to an early-exiting child fail with EPIPE
// instead of raising SIGPIPE in this process. stderr is inherited.
ProcessOutput run_process(const std::string& command, const std::string& input,
                          std::chrono::milliseconds timeout) {
  int in_pair[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, in_pair) != 0)
    throw BackendError(errno_text("socketpair"));
  UniqueFd in_parent(in_pair[0]), in_child(in_pair[1]);
  int out_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0)
    throw BackendError(errno_text("pipe2"));
  UniqueFd out_parent(out_pipe[0]), out_child(out_pipe[1]);

  const pid_t pid = ::fork();
  if (pid < 0) throw BackendError(errno_text("fork"));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_child.get(), STDIN_FILENO);
    ::dup2(out_child.get(), STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  in_child.reset();
  out_child.reset();
  ::fcntl(in_parent.get(), F_SETFL, O_NONBLOCK);
  ::fcntl(out_parent.get(), F_SETFL, O_NONBLOCK);
  if (input.empty()) ::shutdown(in_parent.get(), SHUT_WR);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  ProcessOutput out;
  std::size_t written = 0;
  bool stdin_open = !input.empty();
  bool timed_out = false;
  char buf[65536];
  while (out_parent.get() >= 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[2];
    nfds_t n = 0;
    fds[n++] = {out_parent.get(), POLLIN, 0};
    if (stdin_open) fds[n++] = {in_parent.get(), POLLOUT, 0};
    const int ready = ::poll(fds, n, static_cast<int>(std::min<long long>(
                                         left.count(), 1000)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw BackendError(errno_text("poll"));
    }
    if (stdin_open && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t w = ::send(in_parent.get(), input.data() + written,
                               input.size() - written, MSG_NOSIGNAL);
      if (w > 0) written += static_cast<std::size_t>(w);
      if ((w < 0 && errno != EAGAIN && errno != EINTR) ||
          written == input.size()) {
        ::shutdown(in_parent.get(), SHUT_WR);
        stdin_open = false;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t r = ::read(out_parent.get(), buf, sizeof buf);
      if (r > 0) {
        out.stdout_data.append(buf, static_cast<std::size_t>(r));
      } else if (r == 0 || (errno != EAGAIN && errno != EINTR)) {
        out_parent.reset();
      }
    }
  }

  if (timed_out) ::kill(-pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw BackendError(errno_text("waitpid"));
  }
  if (timed_out)
    throw BackendError("backend timed out after " +
                       std::to_string(timeout.count()) + " ms");
  out.exit_status = WIFEXITED(status)     ? WEXITSTATUS(status)
                    : WIFSIGNALED(status) ? 128 + WTERMSIG(status)
                                          : 1;
  return out;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

std::string single_result_line(const std::string& data) {
  std::istringstream in(data);
  std::string line, found;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++count;
    found = line;
  }
  if (count != 1)
    throw ProtocolError("backend must print exactly one result line, got " +
                        std::to_string(count));
  return found;
}

class TempDir {
 public:
  TempDir() {
    std::string pattern =
        (std::filesystem::temp_directory_path() / "trd-job-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr)
      throw BackendError(errno_text("mkdtemp"));
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace

BackendResult run_job_external(const BackendJob& job,
                               const ExternalBackendOptions& options) {
  job.validate();
  if (options.command.empty()) throw BackendError("no backend command given");
  const std::string payload = job_to_json(job);

  BackendResult result;
  if (options.file_handoff) {
    TempDir dir;
    const auto job_file = dir.path() / "job.json";
    const auto result_file = dir.path() / "result.json";
    {
      std::ofstream out(job_file, std::ios::binary);
      out << payload << '\n';
      if (!out) throw BackendError("cannot write " + job_file.string());
    }
    const auto proc = run_process(
        options.command + " --job-file " + shell_quote(job_file.string()) +
            " --result-file " + shell_quote(result_file.string()),
        {}, options.timeout);
    if (proc.exit_status != 0)
      throw BackendError("backend exited with status " +
                         std::to_string(proc.exit_status));
    std::ifstream in(result_file, std::ios::binary);
    if (!in) throw ProtocolError("backend wrote no result file");
    std::stringstream text;
    text << in.rdbuf();
    result = result_from_json(single_result_line(text.str()));
  } else {
    const auto proc = run_process(options.command, payload + "\n",
                                  options.timeout);
    if (proc.exit_status != 0)
      throw BackendError("backend exited with status " +
                         std::to_string(proc.exit_status));
    result = result_from_json(single_result_line(proc.stdout_data));
  }
  validate_result(job, result);
  return result;
}

}  // namespace trd
