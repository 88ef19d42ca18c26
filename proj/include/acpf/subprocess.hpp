#pragma once

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <string>

#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "acpf/errors.hpp"

namespace acpf {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string stdout_text;
  double wall_seconds = 0.0;
};

// Runs `command` through /bin/sh in its own process group, capturing stdout.
// At the cutoff the group receives SIGTERM, then SIGKILL after the grace
// period. Throws TargetError when the shell itself cannot be spawned.
inline ProcessResult run_with_cutoff(const std::string& command, double cutoff_seconds,
                                     double grace_seconds = 0.5) {
  int pipefd[2];
  if (pipe(pipefd) != 0) throw TargetError("pipe() failed: " + std::string(std::strerror(errno)));

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) {
    close(pipefd[0]);
    close(pipefd[1]);
    throw TargetError("fork() failed: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(pipefd[1], STDOUT_FILENO);
    close(pipefd[0]);
    close(pipefd[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(pipefd[1]);

  ProcessResult result;
  bool term_sent = false;
  bool kill_sent = false;
  bool pipe_open = true;
  bool exited = false;
  int wait_status = 0;

  auto elapsed = [&start]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  while (!exited || pipe_open) {
    if (pipe_open) {
      pollfd pfd{pipefd[0], POLLIN, 0};
      const int rc = poll(&pfd, 1, 50);
      if (rc > 0) {
        char buf[4096];
        const ssize_t n = read(pipefd[0], buf, sizeof buf);
        if (n > 0)
          result.stdout_text.append(buf, static_cast<std::size_t>(n));
        else
          pipe_open = false;
      }
    }
    if (!exited) {
      const pid_t w = waitpid(pid, &wait_status, WNOHANG);
      if (w == pid) exited = true;
    }
    if (!exited) {
      const double t = elapsed();
      if (!term_sent && t >= cutoff_seconds) {
        kill(-pid, SIGTERM);
        term_sent = true;
        result.timed_out = true;
      } else if (term_sent && !kill_sent && t >= cutoff_seconds + grace_seconds) {
        kill(-pid, SIGKILL);
        kill_sent = true;
      }
    }
    if (exited && pipe_open) {
      // Drain whatever remains without blocking forever.
      pollfd pfd{pipefd[0], POLLIN, 0};
      while (poll(&pfd, 1, 0) > 0) {
        char buf[4096];
        const ssize_t n = read(pipefd[0], buf, sizeof buf);
        if (n > 0) {
          result.stdout_text.append(buf, static_cast<std::size_t>(n));
        } else {
          pipe_open = false;
          break;
        }
      }
      pipe_open = false;
    }
  }
  close(pipefd[0]);

  result.wall_seconds = elapsed();
  if (WIFEXITED(wait_status)) result.exit_code = WEXITSTATUS(wait_status);
  if (result.exit_code == 127)
    throw TargetError("target command could not be executed: " + command);
  return result;
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

} // namespace acpf
