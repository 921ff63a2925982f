#include "bdpca/cluster.hpp"
#include "bdpca/error.hpp"
#include "bdpca/log.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <thread>

namespace bdpca {

namespace {

constexpr std::uint32_t kMaxFrameBytes = 1u << 30;

[[noreturn]] void io_fail(const std::string& what) {
  fail(ErrorCode::IoError, what + ": " + std::strerror(errno));
}

class Socket {
 public:
  explicit Socket(int fd = -1) : fd_(fd) {}
  ~Socket() { reset(); }
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = o.release();
    }
    return *this;
  }
  int get() const { return fd_; }
  int release() { return std::exchange(fd_, -1); }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_;
};

void set_timeouts(int fd, std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

void send_all(int fd, std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail("send");
    }
    sent += static_cast<std::size_t>(n);
  }
}

void recv_all(int fd, std::uint8_t* out, std::size_t len) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t n = ::recv(fd, out + got, len - got, 0);
    if (n == 0) fail(ErrorCode::IoError, "connection closed mid-frame");
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail("recv");
    }
    got += static_cast<std::size_t>(n);
  }
}

// Reads one length-prefixed frame; the returned bytes include the prefix.
std::vector<std::uint8_t> read_frame(int fd) {
  std::vector<std::uint8_t> frame(4);
  recv_all(fd, frame.data(), 4);
  const std::uint32_t len = static_cast<std::uint32_t>(frame[0]) | (static_cast<std::uint32_t>(frame[1]) << 8) |
                            (static_cast<std::uint32_t>(frame[2]) << 16) | (static_cast<std::uint32_t>(frame[3]) << 24);
  if (len > kMaxFrameBytes) fail(ErrorCode::CorruptMessage, "frame length " + std::to_string(len) + " too large");
  frame.resize(4 + static_cast<std::size_t>(len));
  recv_all(fd, frame.data() + 4, len);
  return frame;
}

Socket connect_to(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
    fail(ErrorCode::IoError, "resolve " + host + ": " + gai_strerror(rc));
  Socket sock;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (s.get() < 0) continue;
    if (::connect(s.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
      sock = std::move(s);
      break;
    }
  }
  ::freeaddrinfo(res);
  return sock;
}

}  // namespace

TcpCoordinator::TcpCoordinator(std::uint16_t port, const std::string& bind_address) {
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (s.get() < 0) io_fail("socket");
  const int one = 1;
  ::setsockopt(s.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1)
    fail(ErrorCode::InvalidInput, "invalid bind address " + bind_address);
  if (::bind(s.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) io_fail("bind");
  if (::listen(s.get(), 64) != 0) io_fail("listen");
  socklen_t len = sizeof(addr);
  if (::getsockname(s.get(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) io_fail("getsockname");
  port_ = ntohs(addr.sin_port);
  listen_fd_ = s.release();
}

TcpCoordinator::~TcpCoordinator() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

CoordinatorOutcome TcpCoordinator::serve(const JobSpec& job, std::size_t expected_workers,
                                         std::chrono::milliseconds timeout) {
  job.validate();
  require(expected_workers >= 1, "serve: expected at least one worker");
  const std::vector<std::uint8_t> announcement = encode_job(job);
  FrameQueue queue;
  std::atomic<bool> stop{false};
  std::vector<std::thread> handlers;
  const auto deadline = std::chrono::steady_clock::now() + timeout;

  std::thread acceptor([&] {
    std::size_t accepted = 0;
    while (!stop && accepted < expected_workers) {
      pollfd pfd{listen_fd_, POLLIN, 0};
      if (::poll(&pfd, 1, 50) <= 0) continue;
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) continue;
      ++accepted;
      handlers.emplace_back([&, fd] {
        Socket conn(fd);
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        set_timeouts(conn.get(), std::max(left, std::chrono::milliseconds(1)));
        try {
          send_all(conn.get(), announcement);
          queue.push(read_frame(conn.get()));
        } catch (const Error& e) {
          warn(std::string("worker connection dropped: ") + e.what());
          queue.push({});
        }
      });
    }
  });

  std::optional<Collected> collected;
  std::exception_ptr error;
  try {
    collected = collect_frames(queue, expected_workers, timeout);
  } catch (...) {
    error = std::current_exception();
  }
  stop = true;
  acceptor.join();
  for (auto& h : handlers) h.join();
  if (error) std::rethrow_exception(error);
  return finish_round(std::move(*collected), job);
}

LocalSummaryMsg run_tcp_worker(const std::string& host, std::uint16_t port, const DataShard& shard,
                               std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  Socket sock;
  while (true) {
    sock = connect_to(host, port);
    if (sock.get() >= 0) break;
    if (std::chrono::steady_clock::now() >= deadline)
      fail(ErrorCode::Timeout, "could not reach coordinator at " + host + ":" + std::to_string(port));
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  set_timeouts(sock.get(), timeout);
  const JobSpec job = decode_job(read_frame(sock.get()));
  const LocalSummaryMsg msg = worker_round(shard, job);
  send_all(sock.get(), encode(msg));
  return msg;
}

}  // namespace bdpca
