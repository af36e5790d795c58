#include "mmhar/ingest/recording.hpp"

#include <zlib.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "mmhar/core/kv_document.hpp"

namespace mmhar::ingest {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kLogMagic[8] = {'M', 'M', 'H', 'R', 'L', 'O', 'G', 0x01};

const char* log_name(StreamId s) {
  switch (s) {
    case StreamId::Imu: return "imu.pkt.gz";
    case StreamId::Top: return "top.pkt.gz";
    case StreamId::Bottom: return "bottom.pkt.gz";
  }
  return "?";
}

json geometry_to_json(const SensorGeometry& g) {
  return {{"cylinder_height_cm", g.cylinder_height_cm},
          {"cylinder_radius_cm", g.cylinder_radius_cm},
          {"marker_rows", g.marker_rows},
          {"marker_cols", g.marker_cols},
          {"outer_ring_center",
           {{g.outer_ring_center[0].x, g.outer_ring_center[0].y},
            {g.outer_ring_center[1].x, g.outer_ring_center[1].y}}},
          {"outer_ring_radius_px", g.outer_ring_radius_px}};
}

SensorGeometry geometry_from_json(const json& j) {
  SensorGeometry g;
  g.cylinder_height_cm = j.at("cylinder_height_cm").get<double>();
  g.cylinder_radius_cm = j.at("cylinder_radius_cm").get<double>();
  g.marker_rows = j.at("marker_rows").get<int>();
  g.marker_cols = j.at("marker_cols").get<int>();
  const auto& c = j.at("outer_ring_center");
  for (int i = 0; i < 2; ++i) g.outer_ring_center[i] = {c.at(i).at(0).get<double>(), c.at(i).at(1).get<double>()};
  g.outer_ring_radius_px = j.at("outer_ring_radius_px").get<double>();
  return g;
}

void write_meta(const fs::path& dir, const RecordingMeta& m, const std::optional<LabelStream>& labels) {
  json j = {{"format_version", kVersion},
            {"subject_id", m.subject_id},
            {"hand", m.hand == Hand::Left ? "left" : "right"},
            {"geometry", geometry_to_json(m.geometry)},
            {"start_time_us", m.start_time},
            {"source_width", m.source_width},
            {"source_height", m.source_height}};
  if (labels) j["labels_end_us"] = labels->end();
  std::ofstream out(dir / "meta.json");
  out << j.dump(2) << "\n";
  if (!out) throw DataError("cannot write " + (dir / "meta.json").string());
  if (labels) {
    std::ofstream lo(dir / "labels.csv");
    lo << "timestamp_us,label\n";
    for (const auto& e : labels->entries()) lo << e.timestamp << "," << to_string(e.label) << "\n";
    if (!lo) throw DataError("cannot write " + (dir / "labels.csv").string());
  }
}

class GzWriter {
 public:
  explicit GzWriter(const fs::path& path) : path_(path) {
    f_ = gzopen(path.c_str(), "wb1");
    if (!f_) throw DataError("cannot create " + path.string());
    write(kLogMagic, sizeof kLogMagic);
  }
  ~GzWriter() { close(); }
  void write(const void* data, std::size_t n) {
    if (n == 0) return;
    if (gzwrite(f_, data, static_cast<unsigned>(n)) != static_cast<int>(n))
      throw DataError("write failed on " + path_.string());
  }
  void close() {
    if (f_) {
      gzclose(f_);
      f_ = nullptr;
    }
  }

 private:
  fs::path path_;
  gzFile f_ = nullptr;
};

std::vector<std::uint8_t> read_gz(const fs::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw DataError("recording: missing log " + path.string());
  std::vector<std::uint8_t> data;
  std::vector<std::uint8_t> buf(1 << 20);
  for (;;) {
    int n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      int err = 0;
      std::string msg = gzerror(f, &err);
      gzclose(f);
      throw DataError("recording: " + path.filename().string() + ": corrupt compressed stream after byte " +
                      std::to_string(data.size()) + " (" + msg + ")");
    }
    if (n == 0) break;
    data.insert(data.end(), buf.begin(), buf.begin() + n);
  }
  gzclose(f);
  return data;
}

std::vector<Packet> read_log(const fs::path& path) {
  std::vector<std::uint8_t> data = read_gz(path);
  const std::string name = path.filename().string();
  if (data.size() < sizeof kLogMagic || std::memcmp(data.data(), kLogMagic, sizeof kLogMagic) != 0)
    throw DataError("recording: " + name + ": bad log header");
  std::vector<Packet> out;
  std::size_t pos = sizeof kLogMagic;
  while (pos < data.size()) {
    try {
      auto d = decode_prefix(std::span(data).subspan(pos));
      out.push_back(std::move(d.packet));
      pos += d.consumed;
    } catch (const CodecError& e) {
      throw DataError("recording: " + name + ": record " + std::to_string(out.size()) +
                      " (log byte " + std::to_string(pos) + ") is corrupt: " + e.what());
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(StreamId s) {
  switch (s) {
    case StreamId::Imu: return "imu";
    case StreamId::Top: return "top";
    case StreamId::Bottom: return "bottom";
  }
  return "?";
}

StreamId stream_of(const Packet& p) {
  if (std::holds_alternative<ImuSample>(p)) return StreamId::Imu;
  return std::get<TactileFrame>(p).camera == CameraId::Top ? StreamId::Top : StreamId::Bottom;
}

std::size_t Recording::packet_count(StreamId s) const {
  switch (s) {
    case StreamId::Imu: return imu.size();
    case StreamId::Top: return top.size();
    case StreamId::Bottom: return bottom.size();
  }
  return 0;
}

Packet Recording::packet(StreamId s, std::size_t i) const {
  switch (s) {
    case StreamId::Imu: return imu[i];
    case StreamId::Top: return top[i];
    case StreamId::Bottom: return bottom[i];
  }
  return imu[i];
}

void Recording::validate() const {
  auto check = [](const auto& log, std::string_view name) {
    for (std::size_t i = 1; i < log.size(); ++i) {
      if (log[i].timestamp < log[i - 1].timestamp)
        throw OrderError("recording: " + std::string(name) + " record " + std::to_string(i) +
                             " timestamp decreases",
                         i);
    }
  };
  check(imu, "imu");
  check(top, "top");
  check(bottom, "bottom");
  for (std::size_t i = 0; i < top.size(); ++i)
    if (top[i].camera != CameraId::Top) throw DataError("recording: top record " + std::to_string(i) + " is not a top frame");
  for (std::size_t i = 0; i < bottom.size(); ++i)
    if (bottom[i].camera != CameraId::Bottom)
      throw DataError("recording: bottom record " + std::to_string(i) + " is not a bottom frame");
  if (labels && !labels->empty() && !top.empty()) {
    if (labels->start() > top.front().timestamp || labels->end() <= top.back().timestamp)
      throw DataError("recording: label stream does not span the recording interval");
  }
}

void save_recording(const Recording& rec, const fs::path& dir) {
  RecordingWriter w(dir, rec.meta);
  for (const auto& s : rec.imu) w.append(s);
  for (const auto& f : rec.top) w.append(f);
  for (const auto& f : rec.bottom) w.append(f);
  if (rec.labels) w.set_labels(*rec.labels);
  w.close();
}

Recording load_recording(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("recording: " + dir.string() + " is not a directory");
  Recording rec;
  json j;
  {
    std::ifstream in(dir / "meta.json");
    if (!in) throw DataError("recording: missing meta.json in " + dir.string());
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw DataError(std::string("recording: meta.json is corrupt: ") + e.what());
    }
  }
  std::optional<Micros> labels_end;
  try {
    if (j.at("format_version").get<int>() != kVersion)
      throw DataError("recording: unsupported format version");
    rec.meta.subject_id = j.at("subject_id").get<std::string>();
    rec.meta.hand = j.at("hand").get<std::string>() == "left" ? Hand::Left : Hand::Right;
    rec.meta.geometry = geometry_from_json(j.at("geometry"));
    rec.meta.start_time = j.at("start_time_us").get<Micros>();
    rec.meta.source_width = j.at("source_width").get<int>();
    rec.meta.source_height = j.at("source_height").get<int>();
    if (j.contains("labels_end_us")) labels_end = j["labels_end_us"].get<Micros>();
  } catch (const json::exception& e) {
    throw DataError(std::string("recording: meta.json: ") + e.what());
  }

  for (StreamId s : kAllStreams) {
    auto packets = read_log(dir / log_name(s));
    for (std::size_t i = 0; i < packets.size(); ++i) {
      if (stream_of(packets[i]) != s)
        throw DataError("recording: " + std::string(log_name(s)) + ": record " + std::to_string(i) +
                        " belongs to another stream");
      if (s == StreamId::Imu) rec.imu.push_back(std::get<ImuSample>(std::move(packets[i])));
      else if (s == StreamId::Top) rec.top.push_back(std::get<TactileFrame>(std::move(packets[i])));
      else rec.bottom.push_back(std::get<TactileFrame>(std::move(packets[i])));
    }
  }

  if (labels_end) {
    std::ifstream in(dir / "labels.csv");
    if (!in) throw DataError("recording: labels_end_us set but labels.csv missing");
    std::string line;
    std::getline(in, line);
    std::vector<LabelEntry> entries;
    int row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (trim(line).empty()) continue;
      auto comma = line.find(',');
      std::optional<ActionClass> label;
      Micros ts = 0;
      if (comma != std::string::npos) {
        try {
          ts = std::stoll(line.substr(0, comma));
          label = parse_action(trim(line.substr(comma + 1)));
        } catch (const std::exception&) {
          label.reset();
        }
      }
      if (!label) throw DataError("recording: labels.csv row " + std::to_string(row) + " is corrupt");
      entries.push_back({ts, *label});
    }
    rec.labels = LabelStream(std::move(entries), *labels_end);
  }
  rec.validate();
  return rec;
}

struct RecordingWriter::Log {
  explicit Log(const fs::path& p) : writer(p) {}
  std::mutex mu;
  GzWriter writer;
  std::vector<std::uint8_t> scratch;
  std::size_t count = 0;
  Micros last_ts = INT64_MIN;
};

RecordingWriter::RecordingWriter(fs::path dir, RecordingMeta meta) : dir_(std::move(dir)), meta_(std::move(meta)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw DataError("cannot create recording directory " + dir_.string() + ": " + ec.message());
  for (StreamId s : kAllStreams) logs_[static_cast<std::size_t>(s)] = std::make_unique<Log>(dir_ / log_name(s));
}

RecordingWriter::~RecordingWriter() {
  try {
    close();
  } catch (...) {
  }
}

void RecordingWriter::append(const Packet& p) {
  auto& log = *logs_[static_cast<std::size_t>(stream_of(p))];
  std::lock_guard lock(log.mu);
  Micros ts = packet_timestamp(p);
  if (ts < log.last_ts)
    throw OrderError("recording writer: " + std::string(to_string(stream_of(p))) + " timestamp decreases",
                     log.count);
  log.last_ts = ts;
  log.scratch.clear();
  encode_packet_into(p, log.scratch);
  log.writer.write(log.scratch.data(), log.scratch.size());
  ++log.count;
}

void RecordingWriter::set_labels(LabelStream labels) { labels_ = std::move(labels); }

std::size_t RecordingWriter::written(StreamId s) const { return logs_[static_cast<std::size_t>(s)]->count; }

void RecordingWriter::close() {
  if (closed_) return;
  closed_ = true;
  for (auto& l : logs_) l->writer.close();
  write_meta(dir_, meta_, labels_);
}

ReplayStats replay(const Recording& rec, double speed, const std::array<PacketSink, 3>& sinks) {
  if (speed < 0.0) throw ConfigError("replay speed must be positive (0 = as fast as possible)");
  using clock = std::chrono::steady_clock;
  Micros t0 = INT64_MAX;
  for (StreamId s : kAllStreams)
    if (rec.packet_count(s) > 0) t0 = std::min(t0, packet_timestamp(rec.packet(s, 0)));
  ReplayStats stats;
  const auto wall0 = clock::now();
  auto run = [&](StreamId s) {
    const auto idx = static_cast<std::size_t>(s);
    for (std::size_t i = 0; i < rec.packet_count(s); ++i) {
      Packet p = rec.packet(s, i);
      if (speed > 0.0) {
        auto ideal = wall0 + std::chrono::microseconds(static_cast<Micros>(
                                 static_cast<double>(packet_timestamp(p) - t0) / speed));
        std::this_thread::sleep_until(ideal);
        auto late = std::chrono::duration_cast<std::chrono::microseconds>(clock::now() - ideal).count();
        stats.max_lateness_us[idx] = std::max<Micros>(stats.max_lateness_us[idx], late);
      }
      if (sinks[idx] && !sinks[idx](p)) break;
      ++stats.emitted[idx];
    }
  };
  {
    std::jthread a(run, StreamId::Imu), b(run, StreamId::Top), c(run, StreamId::Bottom);
  }
  stats.wall_seconds = std::chrono::duration<double>(clock::now() - wall0).count();
  return stats;
}

}  // namespace mmhar::ingest
