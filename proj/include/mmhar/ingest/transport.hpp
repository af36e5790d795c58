#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mmhar/ingest/codec.hpp"
#include "mmhar/ingest/recording.hpp"

namespace mmhar::ingest {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  // "host:port"; throws ConfigError.
  static Endpoint parse(std::string_view text);
  std::string str() const { return host + ":" + std::to_string(port); }
};

// Raised by the client when the connection ends without an end-of-stream
// trailer (or fails mid-read).
class DisconnectError : public DataError {
 public:
  DisconnectError(const std::string& reason, std::size_t received)
      : DataError("stream disconnected after " + std::to_string(received) + " packets: " + reason),
        received_(received) {}
  std::size_t received() const noexcept { return received_; }

 private:
  std::size_t received_;
};

struct ServeOptions {
  double speed = 1.0;            // 0 = as fast as possible
  int expected_subscribers = 3;  // pacing starts once this many streams subscribed
};

// One TCP connection per sensor stream. A client subscribes by sending the
// 4-byte hello {0xA7, 0x01, 0xF0, stream id}; the server then sends that
// stream's packets in order followed by the trailer {0xA7, 0x01, 0xFF}.
class StreamServer {
 public:
  StreamServer(const Endpoint& endpoint, std::shared_ptr<const Recording> source, ServeOptions options = {});
  ~StreamServer();
  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  std::uint16_t port() const { return port_; }
  Endpoint endpoint() const { return {host_, port_}; }

  // Blocks until every subscribed stream has been sent completely.
  void wait();
  // Drops all connections immediately (no trailers).
  void stop();
  std::array<std::size_t, 3> sent() const;

 private:
  void accept_loop();
  void send_stream(int fd, StreamId s);

  std::shared_ptr<const Recording> source_;
  ServeOptions options_;
  std::string host_;
  std::uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::thread> senders_;
  std::vector<int> client_fds_;
  int subscribed_ = 0;
  std::optional<std::int64_t> start_wall_ns_;
  std::array<std::atomic<std::size_t>, 3> sent_{};
  std::condition_variable start_cv_;
};

class StreamClient {
 public:
  static StreamClient connect(const Endpoint& endpoint, StreamId stream);
  StreamClient(StreamClient&& other) noexcept;
  StreamClient& operator=(StreamClient&& other) noexcept;
  ~StreamClient();

  // Next packet in send order; nullopt on a clean end of stream.
  // Throws DisconnectError on connection loss and CodecError on garbage.
  std::optional<Packet> next();
  std::size_t received() const { return received_; }
  StreamId stream() const { return stream_; }

 private:
  StreamClient(int fd, StreamId s) : fd_(fd), stream_(s) {}
  bool fill(std::size_t n);

  int fd_ = -1;
  StreamId stream_ = StreamId::Imu;
  std::vector<std::uint8_t> buf_;
  std::size_t received_ = 0;
  bool ended_ = false;
};

// Connects to all three streams and writes them into a recording directory.
// Returns the number of packets per stream. Throws DisconnectError if any
// stream is lost.
std::array<std::size_t, 3> record_from(const Endpoint& endpoint, const std::filesystem::path& dir,
                                       const RecordingMeta& meta);

}  // namespace mmhar::ingest
