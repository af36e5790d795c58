#include "mmhar/ingest/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>

namespace mmhar::ingest {

namespace {

constexpr std::uint8_t kHelloKind = 0xF0;

bool send_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size())
    throw ConfigError("endpoint must be host:port, got '" + std::string(text) + "'");
  Endpoint e;
  e.host = std::string(text.substr(0, colon));
  try {
    std::size_t used = 0;
    std::string port(text.substr(colon + 1));
    int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range("port");
    e.port = static_cast<std::uint16_t>(p);
  } catch (const std::exception&) {
    throw ConfigError("endpoint port invalid in '" + std::string(text) + "'");
  }
  return e;
}

StreamServer::StreamServer(const Endpoint& endpoint, std::shared_ptr<const Recording> source, ServeOptions options)
    : source_(std::move(source)), options_(options), host_(endpoint.host) {
  if (options_.speed < 0.0) throw ConfigError("serve: speed must be >= 0");
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw DataError(std::string("serve: socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(endpoint.port);
  if (::inet_pton(AF_INET, endpoint.host == "localhost" ? "127.0.0.1" : endpoint.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw ConfigError("serve: cannot parse IPv4 host '" + endpoint.host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 8) < 0) {
    std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw DataError("serve: cannot listen on " + endpoint.str() + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

StreamServer::~StreamServer() {
  stop();
}

void StreamServer::accept_loop() {
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    int r = ::poll(&pfd, 1, 50);
    if (r <= 0) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::uint8_t hello[4];
    std::size_t got = 0;
    while (got < 4) {
      ssize_t n = ::recv(fd, hello + got, 4 - got, 0);
      if (n <= 0) break;
      got += static_cast<std::size_t>(n);
    }
    if (got != 4 || hello[0] != kMagic || hello[1] != kVersion || hello[2] != kHelloKind || hello[3] > 2) {
      ::close(fd);
      continue;
    }
    std::lock_guard lock(mu_);
    client_fds_.push_back(fd);
    ++subscribed_;
    if (subscribed_ >= options_.expected_subscribers && !start_wall_ns_) {
      start_wall_ns_ = now_ns();
      start_cv_.notify_all();
    }
    senders_.emplace_back([this, fd, s = static_cast<StreamId>(hello[3])] { send_stream(fd, s); });
  }
}

void StreamServer::send_stream(int fd, StreamId s) {
  std::int64_t start = 0;
  {
    std::unique_lock lock(mu_);
    start_cv_.wait(lock, [&] { return stopping_.load() || start_wall_ns_.has_value(); });
    if (stopping_) return;
    start = *start_wall_ns_;
  }
  const Recording& rec = *source_;
  Micros t0 = INT64_MAX;
  for (StreamId k : kAllStreams)
    if (rec.packet_count(k) > 0) t0 = std::min(t0, packet_timestamp(rec.packet(k, 0)));
  std::vector<std::uint8_t> buf;
  const auto idx = static_cast<std::size_t>(s);
  for (std::size_t i = 0; i < rec.packet_count(s) && !stopping_; ++i) {
    Packet p = rec.packet(s, i);
    if (options_.speed > 0.0) {
      auto offset_ns = static_cast<std::int64_t>(static_cast<double>(packet_timestamp(p) - t0) * 1000.0 / options_.speed);
      auto target = std::chrono::steady_clock::time_point(std::chrono::nanoseconds(start + offset_ns));
      std::this_thread::sleep_until(target);
    }
    buf.clear();
    encode_packet_into(p, buf);
    if (!send_all(fd, buf.data(), buf.size())) return;
    sent_[idx].fetch_add(1);
  }
  if (stopping_) return;
  const std::uint8_t trailer[3] = {kMagic, kVersion, kEndOfStreamKind};
  send_all(fd, trailer, sizeof trailer);
  ::shutdown(fd, SHUT_WR);
}

void StreamServer::wait() {
  // Senders finish on their own; joining them here is safe because stop()
  // only touches the fds.
  for (;;) {
    std::vector<std::thread> batch;
    {
      std::lock_guard lock(mu_);
      if (senders_.empty()) {
        if (subscribed_ >= options_.expected_subscribers || stopping_) break;
      }
      batch.swap(senders_);
    }
    if (batch.empty()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      continue;
    }
    for (auto& t : batch) t.join();
  }
}

void StreamServer::stop() {
  if (stopping_.exchange(true)) {
    if (acceptor_.joinable()) acceptor_.join();
    return;
  }
  {
    std::lock_guard lock(mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    start_cv_.notify_all();
  }
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> batch;
  {
    std::lock_guard lock(mu_);
    batch.swap(senders_);
  }
  for (auto& t : batch) t.join();
  std::lock_guard lock(mu_);
  for (int fd : client_fds_) ::close(fd);
  client_fds_.clear();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

std::array<std::size_t, 3> StreamServer::sent() const {
  return {sent_[0].load(), sent_[1].load(), sent_[2].load()};
}

StreamClient StreamClient::connect(const Endpoint& endpoint, StreamId stream) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::string port = std::to_string(endpoint.port);
  if (::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
    throw DataError("connect: cannot resolve " + endpoint.str());
  int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0 || ::connect(fd, res->ai_addr, res->ai_addrlen) < 0) {
    std::string err = std::strerror(errno);
    ::freeaddrinfo(res);
    if (fd >= 0) ::close(fd);
    throw DataError("connect: " + endpoint.str() + ": " + err);
  }
  ::freeaddrinfo(res);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  const std::uint8_t hello[4] = {kMagic, kVersion, kHelloKind, static_cast<std::uint8_t>(stream)};
  if (!send_all(fd, hello, sizeof hello)) {
    ::close(fd);
    throw DataError("connect: " + endpoint.str() + ": subscription failed");
  }
  return StreamClient(fd, stream);
}

StreamClient::StreamClient(StreamClient&& o) noexcept
    : fd_(std::exchange(o.fd_, -1)), stream_(o.stream_), buf_(std::move(o.buf_)), received_(o.received_), ended_(o.ended_) {}

StreamClient& StreamClient::operator=(StreamClient&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(o.fd_, -1);
    stream_ = o.stream_;
    buf_ = std::move(o.buf_);
    received_ = o.received_;
    ended_ = o.ended_;
  }
  return *this;
}

StreamClient::~StreamClient() {
  if (fd_ >= 0) ::close(fd_);
}

bool StreamClient::fill(std::size_t n) {
  std::uint8_t chunk[65536];
  while (buf_.size() < n) {
    ssize_t r = ::recv(fd_, chunk, sizeof chunk, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw DisconnectError(std::strerror(errno), received_);
    }
    if (r == 0) return false;
    buf_.insert(buf_.end(), chunk, chunk + r);
  }
  return true;
}

std::optional<Packet> StreamClient::next() {
  if (ended_) return std::nullopt;
  if (!fill(kHeaderSize)) {
    throw DisconnectError(buf_.empty() ? "connection closed before end-of-stream trailer"
                                       : "connection closed inside a packet header",
                          received_);
  }
  if (buf_[0] == kMagic && buf_[1] == kVersion && buf_[2] == kEndOfStreamKind) {
    ended_ = true;
    buf_.erase(buf_.begin(), buf_.begin() + kHeaderSize);
    return std::nullopt;
  }
  std::size_t need = expected_size(buf_);
  if (need == 0) {
    if (!fill(kFrameHeaderSize)) throw DisconnectError("connection closed inside a frame header", received_);
    need = expected_size(buf_);
  }
  if (!fill(need)) throw DisconnectError("connection closed inside a packet body", received_);
  auto d = decode_prefix(std::span(buf_).first(need));
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(need));
  ++received_;
  return std::move(d.packet);
}

std::array<std::size_t, 3> record_from(const Endpoint& endpoint, const std::filesystem::path& dir,
                                       const RecordingMeta& meta) {
  RecordingWriter writer(dir, meta);
  std::array<std::size_t, 3> counts{};
  std::array<std::exception_ptr, 3> errors{};
  {
    std::vector<std::jthread> readers;
    for (StreamId s : kAllStreams) {
      readers.emplace_back([&, s] {
        try {
          auto client = StreamClient::connect(endpoint, s);
          while (auto p = client.next()) writer.append(*p);
          counts[static_cast<std::size_t>(s)] = client.received();
        } catch (...) {
          errors[static_cast<std::size_t>(s)] = std::current_exception();
        }
      });
    }
  }
  writer.close();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return counts;
}

}  // namespace mmhar::ingest
