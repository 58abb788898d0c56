#include "cohortshap/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <algorithm>
#include <cstring>
#include <mutex>

#include "cohortshap/error.hpp"

namespace cohortshap {

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) {
      throw ModelError(std::string("pipe: ") + std::strerror(errno));
    }
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (fd[0] >= 0) ::close(fd[0]);
    fd[0] = -1;
  }
  void close_write() {
    if (fd[1] >= 0) ::close(fd[1]);
    fd[1] = -1;
  }
};

}  // namespace

CommandResult run_command(const std::string& command, std::string_view input) {
  Pipe in, out, err;
  const pid_t pid = ::fork();
  if (pid < 0) throw ModelError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in.fd[0], STDIN_FILENO);
    ::dup2(out.fd[1], STDOUT_FILENO);
    ::dup2(err.fd[1], STDERR_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  in.close_read();
  out.close_write();
  err.close_write();

  // A child that exits early must not kill us with SIGPIPE.
  static std::once_flag sigpipe_once;
  std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });

  CommandResult result;
  std::size_t written = 0;
  if (input.empty()) in.close_write();
  char buf[65536];
  while (out.fd[0] >= 0 || err.fd[0] >= 0) {
    pollfd fds[3];
    int nfds = 0;
    int in_slot = -1, out_slot = -1, err_slot = -1;
    if (in.fd[1] >= 0) {
      in_slot = nfds;
      fds[nfds++] = {in.fd[1], POLLOUT, 0};
    }
    if (out.fd[0] >= 0) {
      out_slot = nfds;
      fds[nfds++] = {out.fd[0], POLLIN, 0};
    }
    if (err.fd[0] >= 0) {
      err_slot = nfds;
      fds[nfds++] = {err.fd[0], POLLIN, 0};
    }
    if (::poll(fds, static_cast<nfds_t>(nfds), -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (in_slot >= 0 && fds[in_slot].revents) {
      if (fds[in_slot].revents & POLLOUT) {
        const std::size_t chunk = std::min<std::size_t>(input.size() - written, 65536);
        const ssize_t k = ::write(in.fd[1], input.data() + written, chunk);
        if (k > 0) written += static_cast<std::size_t>(k);
        if (k < 0 && errno != EINTR && errno != EAGAIN) in.close_write();
      } else {
        in.close_write();
      }
      if (written == input.size()) in.close_write();
    }
    auto drain = [&](int slot, Pipe& p, std::string& sink) {
      if (slot < 0 || !fds[slot].revents) return;
      const ssize_t k = ::read(p.fd[0], buf, sizeof buf);
      if (k > 0) {
        sink.append(buf, static_cast<std::size_t>(k));
      } else if (k == 0 || (errno != EINTR && errno != EAGAIN)) {
        p.close_read();
      }
    };
    drain(out_slot, out, result.out);
    drain(err_slot, err, result.err);
  }
  in.close_write();
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace cohortshap
