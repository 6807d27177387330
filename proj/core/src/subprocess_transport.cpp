#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "wobble/oracle.hpp"
#include "wobble/wire.hpp"

namespace wobble {

namespace {

using Clock = std::chrono::steady_clock;

class SubprocessTransport final : public OracleTransport {
 public:
  SubprocessTransport(std::string command, std::chrono::milliseconds timeout)
      : command_(std::move(command)), timeout_(timeout) {
    int in_pair[2];
    int out_pair[2];
    // Sockets instead of pipes so writes can use MSG_NOSIGNAL.
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, in_pair) != 0) {
      fail(Errc::spawn_failure, std::string("socketpair: ") + std::strerror(errno));
    }
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, out_pair) != 0) {
      ::close(in_pair[0]);
      ::close(in_pair[1]);
      fail(Errc::spawn_failure, std::string("socketpair: ") + std::strerror(errno));
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      for (int fd : {in_pair[0], in_pair[1], out_pair[0], out_pair[1]}) ::close(fd);
      fail(Errc::spawn_failure, std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::setpgid(0, 0);
      ::dup2(in_pair[1], STDIN_FILENO);
      ::dup2(out_pair[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pair[1]);
    ::close(out_pair[1]);
    to_child_ = in_pair[0];
    from_child_ = out_pair[0];
  }

  ~SubprocessTransport() override {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ > 0) {
      const auto deadline = Clock::now() + std::chrono::milliseconds(500);
      int status = 0;
      while (::waitpid(pid_, &status, WNOHANG) == 0) {
        if (Clock::now() >= deadline) {
          ::kill(-pid_, SIGKILL);
          ::kill(pid_, SIGKILL);
          ::waitpid(pid_, &status, 0);
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
    }
  }

  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  OracleInfo handshake() override {
    auto line = read_line(Clock::now() + timeout_, /*during_handshake=*/true);
    return wire::decode_hello(line);
  }

  PredictionBatch classify_chunk(const Matrix& inputs) override {
    const auto id = next_id_++;
    const auto deadline = Clock::now() + timeout_;
    write_all(wire::encode_request(id, inputs) + "\n", deadline);
    const auto response = wire::decode_response(read_line(deadline, false));
    if (response.id != id) {
      fail(Errc::protocol_violation, "response id " + std::to_string(response.id) +
                                         " does not echo request id " + std::to_string(id));
    }
    if (response.error) fail(Errc::transport_failure, "oracle error: " + *response.error);
    return response.batch;
  }

  std::string description() const override { return "cmd:" + command_; }

 private:
  int remaining_ms(Clock::time_point deadline) const {
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left < 0 ? 0 : static_cast<int>(left);
  }

  std::string read_line(Clock::time_point deadline, bool during_handshake) {
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        return line;
      }
      pollfd pfd{from_child_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
      if (ready < 0) {
        if (errno == EINTR) continue;
        fail(Errc::transport_failure, std::string("poll: ") + std::strerror(errno));
      }
      if (ready == 0) {
        fail(Errc::timeout, during_handshake ? "oracle sent no handshake before timeout"
                                             : "oracle did not answer before timeout");
      }
      char chunk[65536];
      const auto n = ::read(from_child_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        fail(Errc::transport_failure, std::string("read: ") + std::strerror(errno));
      }
      if (n == 0) {
        fail(during_handshake ? Errc::spawn_failure : Errc::transport_failure,
             "oracle process closed its output" +
                 std::string(during_handshake ? " before the handshake" : ""));
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void write_all(const std::string& data, Clock::time_point deadline) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      pollfd pfd{to_child_, POLLOUT, 0};
      const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
      if (ready < 0) {
        if (errno == EINTR) continue;
        fail(Errc::transport_failure, std::string("poll: ") + std::strerror(errno));
      }
      if (ready == 0) fail(Errc::timeout, "oracle did not accept the request before timeout");
      const auto n = ::send(to_child_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        fail(Errc::transport_failure, std::string("write to oracle: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string command_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 0;
};

}  // namespace

std::unique_ptr<OracleTransport> make_subprocess_transport(const std::string& command_line,
                                                           std::chrono::milliseconds timeout) {
  return std::make_unique<SubprocessTransport>(command_line, timeout);
}

}  // namespace wobble
