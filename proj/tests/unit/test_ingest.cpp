#include <doctest.h>

#include <zlib.h>

#include <chrono>
#include <filesystem>
#include <random>
#include <thread>

#include "../support/oracles.hpp"
#include "mmhar/ingest/codec.hpp"
#include "mmhar/ingest/recording.hpp"
#include "mmhar/ingest/transport.hpp"

using namespace mmhar;
using namespace mmhar::ingest;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mmhar_test_ingest_" + name);
  fs::remove_all(p);
  return p;
}

// Deterministic recording on ideal grids with small frames.
Recording plain_recording(double seconds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Recording r;
  r.meta.subject_id = "s" + std::to_string(seed);
  r.meta.source_width = 16;
  r.meta.source_height = 9;
  const Micros t0 = 1'000'000;
  const int imu_n = static_cast<int>(seconds * 40);
  for (int k = 0; k < imu_n; ++k)
    for (int m = 0; m < kImuModules; ++m) {
      ImuSample s;
      s.module_id = static_cast<std::uint8_t>(m);
      s.timestamp = t0 + k * 25'000;
      for (int i = 0; i < 3; ++i) {
        s.accel[i] = u(rng);
        s.gyro[i] = 100 * u(rng);
        s.mag[i] = 40 * u(rng);
      }
      r.imu.push_back(s);
    }
  const int frames = static_cast<int>(seconds * 30);
  for (int k = 0; k < frames; ++k)
    for (auto cam : {CameraId::Top, CameraId::Bottom}) {
      TactileFrame f;
      f.camera = cam;
      f.timestamp = t0 + static_cast<Micros>(std::llround(k * 1e6 / 30.0));
      f.width = 16;
      f.height = 9;
      f.pixels.resize(144);
      for (auto& p : f.pixels) p = static_cast<std::uint8_t>(rng());
      (cam == CameraId::Top ? r.top : r.bottom).push_back(std::move(f));
    }
  r.labels = LabelStream({{t0, ActionClass::Idle}, {t0 + static_cast<Micros>(seconds * 0.5e6), ActionClass::Tapping}},
                         t0 + static_cast<Micros>(seconds * 1e6));
  return r;
}

Packet random_packet(std::mt19937_64& rng) {
  if (rng() % 2) {
    ImuSample s;
    s.module_id = static_cast<std::uint8_t>(rng() % 8);
    s.timestamp = static_cast<Micros>(rng() >> 1);
    auto f = [&] {
      float v;
      do {
        std::uint32_t bits = static_cast<std::uint32_t>(rng());
        std::memcpy(&v, &bits, 4);
      } while (!std::isfinite(v));
      return v;
    };
    for (int i = 0; i < 3; ++i) {
      s.accel[i] = f();
      s.gyro[i] = f();
      s.mag[i] = f();
    }
    return s;
  }
  TactileFrame fr;
  fr.camera = rng() % 2 ? CameraId::Top : CameraId::Bottom;
  fr.timestamp = static_cast<Micros>(rng() >> 1);
  fr.width = static_cast<int>(rng() % 20);
  fr.height = static_cast<int>(rng() % 20);
  fr.pixels.resize(static_cast<std::size_t>(fr.width * fr.height));
  for (auto& p : fr.pixels) p = static_cast<std::uint8_t>(rng());
  return fr;
}

}  // namespace

TEST_CASE("hand-assembled IMU packet decodes") {
  auto bytes = oracle::imu_bytes(3, 1000, {});
  REQUIRE(bytes.size() == 48);
  auto p = decode_packet(bytes);
  auto& s = std::get<ImuSample>(p);
  CHECK(s.module_id == 3);
  CHECK(s.timestamp == 1000);
  for (float v : s.channels()) CHECK(v == 0.0f);
  CHECK(encode_packet(p) == bytes);

  std::vector<std::uint8_t> px = {1, 2, 3, 4, 5, 6};
  auto fb = oracle::frame_bytes(1, 77, 3, 2, px);
  auto f = std::get<TactileFrame>(decode_packet(fb));
  CHECK(f.camera == CameraId::Bottom);
  CHECK(f.width == 3);
  CHECK(f.height == 2);
  CHECK(f.pixels == px);
  CHECK(encode_packet(f) == fb);
}

TEST_CASE("codec errors carry offsets") {
  auto bytes = oracle::imu_bytes(3, 1000, {});
  auto fault = [](std::vector<std::uint8_t> b) -> std::pair<CodecFault, std::size_t> {
    try {
      decode_packet(b);
    } catch (const CodecError& e) {
      return {e.fault(), e.offset()};
    }
    FAIL("no error");
    return {};
  };
  auto b = bytes;
  b[0] = 0x00;
  CHECK(fault(b) == std::pair{CodecFault::BadMagic, std::size_t{0}});
  b = bytes;
  b[1] = 0x02;
  CHECK(fault(b) == std::pair{CodecFault::BadVersion, std::size_t{1}});
  b = bytes;
  b[2] = 0x09;
  CHECK(fault(b).first == CodecFault::BadKind);
  b = bytes;
  b.resize(20);
  CHECK(fault(b).first == CodecFault::Truncated);
  b = bytes;
  b.push_back(0);
  CHECK(fault(b) == std::pair{CodecFault::Truncated, std::size_t{48}});
  b = bytes;
  b[3] = 8;
  CHECK(fault(b) == std::pair{CodecFault::InvalidField, std::size_t{3}});
  CHECK(fault({}).first == CodecFault::Truncated);
}

TEST_CASE("codec round trip and fuzz") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20000; ++i) {
    auto p = random_packet(rng);
    auto bytes = encode_packet(p);
    auto q = decode_packet(bytes);
    REQUIRE(q == p);
    REQUIRE(encode_packet(q) == bytes);
  }
  std::size_t ok = 0, err = 0;
  for (int i = 0; i < 50000; ++i) {
    std::vector<std::uint8_t> b(rng() % 64);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    if (!b.empty() && rng() % 2) b[0] = 0xA7;
    if (b.size() > 1 && rng() % 2) b[1] = 0x01;
    try {
      decode_packet(b);
      ++ok;
    } catch (const CodecError&) {
      ++err;
    }
  }
  CHECK(ok + err == 50000);
}

TEST_CASE("recording round trip and validation") {
  auto rec = plain_recording(3.0, 1);
  auto dir = scratch("roundtrip");
  save_recording(rec, dir);
  auto back = load_recording(dir);
  CHECK(back == rec);

  auto bad = rec;
  std::swap(bad.top[4], bad.top[5]);
  CHECK_THROWS_AS(bad.validate(), OrderError);

  auto unlabeled = rec;
  unlabeled.labels = LabelStream({{rec.top.back().timestamp, ActionClass::Idle}}, rec.top.back().timestamp + 1);
  CHECK_THROWS_AS(unlabeled.validate(), DataError);
  fs::remove_all(dir);
}

TEST_CASE("corrupt log names the first bad record") {
  auto rec = plain_recording(1.0, 2);
  auto dir = scratch("corrupt");
  save_recording(rec, dir);
  gzFile f = gzopen((dir / "top.pkt.gz").c_str(), "wb");
  const char magic[8] = {'M', 'M', 'H', 'R', 'L', 'O', 'G', 0x01};
  gzwrite(f, magic, 8);
  for (int i = 0; i < 3; ++i) {
    auto b = encode_packet(rec.top[static_cast<std::size_t>(i)]);
    gzwrite(f, b.data(), static_cast<unsigned>(b.size()));
  }
  const std::uint8_t junk[5] = {0xA7, 0x01, 0x02, 0x00, 0x01};
  gzwrite(f, junk, 5);
  gzclose(f);
  try {
    load_recording(dir);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("record 3") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("replay preserves logs and paces by speed") {
  auto rec = plain_recording(10.0, 3);
  std::array<std::vector<Packet>, 3> got;
  std::array<PacketSink, 3> sinks;
  for (int s = 0; s < 3; ++s)
    sinks[static_cast<std::size_t>(s)] = [&got, s](const Packet& p) {
      got[static_cast<std::size_t>(s)].push_back(p);
      return true;
    };
  auto st = replay(rec, 0.0, sinks);
  CHECK(got[0].size() == rec.imu.size());
  for (std::size_t i = 0; i < rec.top.size(); ++i) REQUIRE(std::get<TactileFrame>(got[1][i]) == rec.top[i]);
  for (std::size_t i = 0; i < rec.imu.size(); ++i) REQUIRE(std::get<ImuSample>(got[0][i]) == rec.imu[i]);

  for (auto& g : got) g.clear();
  const auto t0 = std::chrono::steady_clock::now();
  st = replay(rec, 2.0, sinks);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double span = static_cast<double>(rec.imu.back().timestamp - rec.imu.front().timestamp) / 1e6;
  CHECK(wall == doctest::Approx(span / 2.0).epsilon(0.05));
  CHECK(got[2].size() == rec.bottom.size());
  CHECK_THROWS_AS(replay(rec, -1.0, sinks), ConfigError);
}

TEST_CASE("loopback serve and record") {
  auto rec = std::make_shared<Recording>(plain_recording(3.0, 4));
  StreamServer server({"127.0.0.1", 0}, rec, {0.0, 3});
  auto dir = scratch("record");
  auto counts = record_from(server.endpoint(), dir, rec->meta);
  server.wait();
  CHECK(counts[0] == rec->imu.size());
  auto back = load_recording(dir);
  CHECK(back.imu == rec->imu);
  CHECK(back.top == rec->top);
  CHECK(back.bottom == rec->bottom);
  fs::remove_all(dir);
}

TEST_CASE("per-stream order over concurrent connections") {
  auto rec = std::make_shared<Recording>(plain_recording(4.0, 5));
  StreamServer server({"127.0.0.1", 0}, rec, {0.0, 3});
  std::array<std::vector<Micros>, 3> ts;
  std::vector<std::thread> th;
  for (auto s : kAllStreams)
    th.emplace_back([&, s] {
      auto c = StreamClient::connect(server.endpoint(), s);
      while (auto p = c.next()) ts[static_cast<std::size_t>(s)].push_back(packet_timestamp(*p));
    });
  for (auto& t : th) t.join();
  server.wait();
  REQUIRE(ts[1].size() == rec->top.size());
  for (std::size_t i = 0; i < rec->top.size(); ++i) CHECK(ts[1][i] == rec->top[i].timestamp);
  for (std::size_t i = 0; i < rec->imu.size(); ++i) REQUIRE(ts[0][i] == rec->imu[i].timestamp);
}

TEST_CASE("server stop surfaces a disconnect") {
  auto rec = std::make_shared<Recording>(plain_recording(10.0, 6));
  StreamServer server({"127.0.0.1", 0}, rec, {1.0, 1});
  auto c = StreamClient::connect(server.endpoint(), StreamId::Top);
  REQUIRE(c.next().has_value());
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  bool disconnected = false;
  try {
    while (c.next()) {
    }
  } catch (const DisconnectError& e) {
    disconnected = true;
    CHECK(e.received() < rec->top.size());
  }
  CHECK(disconnected);
}

TEST_CASE("endpoint parsing") {
  auto e = Endpoint::parse("localhost:9000");
  CHECK(e.host == "localhost");
  CHECK(e.port == 9000);
  CHECK_THROWS_AS(Endpoint::parse("nope"), ConfigError);
  CHECK_THROWS_AS(Endpoint::parse("h:99999"), ConfigError);
}
