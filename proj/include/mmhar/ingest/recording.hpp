#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mmhar/core/label_stream.hpp"
#include "mmhar/core/types.hpp"
#include "mmhar/ingest/codec.hpp"

namespace mmhar::ingest {

enum class StreamId : std::uint8_t { Imu = 0, Top = 1, Bottom = 2 };
inline constexpr std::array<StreamId, 3> kAllStreams = {StreamId::Imu, StreamId::Top, StreamId::Bottom};
std::string_view to_string(StreamId s);
StreamId stream_of(const Packet& p);

struct RecordingMeta {
  std::string subject_id = "synthetic";
  Hand hand = Hand::Right;
  SensorGeometry geometry;
  Micros start_time = 0;
  int source_width = 256;
  int source_height = 144;
  friend bool operator==(const RecordingMeta&, const RecordingMeta&) = default;
};

struct Recording {
  RecordingMeta meta;
  std::vector<ImuSample> imu;
  std::vector<TactileFrame> top;
  std::vector<TactileFrame> bottom;
  std::optional<LabelStream> labels;

  std::size_t packet_count(StreamId s) const;
  Packet packet(StreamId s, std::size_t i) const;
  // Throws DataError naming the first out-of-order record.
  void validate() const;
  friend bool operator==(const Recording&, const Recording&) = default;
};

// Directory container: meta.json, labels.csv (optional) and one gzip packet
// log per stream (imu.pkt.gz, top.pkt.gz, bottom.pkt.gz).
void save_recording(const Recording& rec, const std::filesystem::path& dir);
Recording load_recording(const std::filesystem::path& dir);

// Append-only writer that may be fed from the three stream consumers
// concurrently. Timestamps come from the packets themselves.
class RecordingWriter {
 public:
  RecordingWriter(std::filesystem::path dir, RecordingMeta meta);
  ~RecordingWriter();
  RecordingWriter(const RecordingWriter&) = delete;
  RecordingWriter& operator=(const RecordingWriter&) = delete;

  void append(const Packet& p);
  void set_labels(LabelStream labels);
  void close();
  std::size_t written(StreamId s) const;

 private:
  struct Log;
  std::filesystem::path dir_;
  RecordingMeta meta_;
  std::optional<LabelStream> labels_;
  std::array<std::unique_ptr<Log>, 3> logs_;
  bool closed_ = false;
};

using PacketSink = std::function<bool(const Packet&)>;

struct ReplayStats {
  std::array<std::size_t, 3> emitted{};
  std::array<Micros, 3> max_lateness_us{};  // emission time minus ideal time
  double wall_seconds = 0.0;
};

// Emits every stream on its own thread, paced at the recorded inter-arrival
// times divided by `speed` (0 = as fast as possible). Packets are emitted
// with their recorded timestamps. A sink returning false stops its stream.
ReplayStats replay(const Recording& rec, double speed, const std::array<PacketSink, 3>& sinks);

}  // namespace mmhar::ingest
