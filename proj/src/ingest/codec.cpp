#include "mmhar/ingest/codec.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace mmhar::ingest {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t v = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

float get_f32(const std::uint8_t* p) {
  std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(v);
}

void check_header(std::span<const std::uint8_t> b) {
  if (b.empty()) throw CodecError(CodecFault::Truncated, 0, "empty buffer");
  if (b[0] != kMagic) throw CodecError(CodecFault::BadMagic, 0, "expected magic 0xA7");
  if (b.size() < 2) throw CodecError(CodecFault::Truncated, 1, "missing version byte");
  if (b[1] != kVersion) throw CodecError(CodecFault::BadVersion, 1, "unsupported protocol version");
  if (b.size() < 3) throw CodecError(CodecFault::Truncated, 2, "missing kind byte");
  if (b[2] != static_cast<std::uint8_t>(PacketKind::Imu) &&
      b[2] != static_cast<std::uint8_t>(PacketKind::Frame))
    throw CodecError(CodecFault::BadKind, 2, "unknown packet kind");
}

}  // namespace

std::string_view to_string(CodecFault f) {
  switch (f) {
    case CodecFault::BadMagic: return "bad magic";
    case CodecFault::BadVersion: return "bad version";
    case CodecFault::BadKind: return "bad kind";
    case CodecFault::Truncated: return "length error";
    case CodecFault::InvalidField: return "invalid field";
  }
  return "?";
}

CodecError::CodecError(CodecFault fault, std::size_t offset, const std::string& detail)
    : DataError("protocol " + std::string(to_string(fault)) + " at byte offset " +
                std::to_string(offset) + ": " + detail),
      fault_(fault),
      offset_(offset) {}

Micros packet_timestamp(const Packet& p) {
  return std::visit([](const auto& v) { return v.timestamp; }, p);
}

void encode_packet_into(const Packet& p, std::vector<std::uint8_t>& out) {
  out.push_back(kMagic);
  out.push_back(kVersion);
  if (const auto* imu = std::get_if<ImuSample>(&p)) {
    out.push_back(static_cast<std::uint8_t>(PacketKind::Imu));
    out.push_back(imu->module_id);
    put_u64(out, static_cast<std::uint64_t>(imu->timestamp));
    for (float v : imu->channels()) put_f32(out, v);
  } else {
    const auto& f = std::get<TactileFrame>(p);
    if (f.width < 0 || f.height < 0 || f.width > 0xFFFF || f.height > 0xFFFF ||
        f.pixels.size() != static_cast<std::size_t>(f.width) * static_cast<std::size_t>(f.height))
      throw DataError("encode_packet: frame dimensions do not match pixel buffer");
    out.push_back(static_cast<std::uint8_t>(PacketKind::Frame));
    out.push_back(static_cast<std::uint8_t>(f.camera));
    put_u64(out, static_cast<std::uint64_t>(f.timestamp));
    put_u16(out, static_cast<std::uint16_t>(f.width));
    put_u16(out, static_cast<std::uint16_t>(f.height));
    out.insert(out.end(), f.pixels.begin(), f.pixels.end());
  }
}

std::vector<std::uint8_t> encode_packet(const Packet& p) {
  std::vector<std::uint8_t> out;
  encode_packet_into(p, out);
  return out;
}

std::size_t expected_size(std::span<const std::uint8_t> b) {
  if (b.size() < kHeaderSize) return 0;
  check_header(b);
  if (b[2] == static_cast<std::uint8_t>(PacketKind::Imu)) return kImuPacketSize;
  if (b.size() < kFrameHeaderSize) return 0;
  std::size_t w = get_u16(b.data() + 12), h = get_u16(b.data() + 14);
  return kFrameHeaderSize + w * h;
}

DecodedPacket decode_prefix(std::span<const std::uint8_t> b) {
  check_header(b);
  const std::uint8_t* d = b.data();
  if (b[2] == static_cast<std::uint8_t>(PacketKind::Imu)) {
    if (b.size() < kImuPacketSize)
      throw CodecError(CodecFault::Truncated, b.size(),
                       "IMU packet needs 48 bytes, have " + std::to_string(b.size()));
    ImuSample s;
    s.module_id = d[3];
    if (s.module_id >= kImuModules)
      throw CodecError(CodecFault::InvalidField, 3, "module id " + std::to_string(s.module_id));
    std::uint64_t ts = get_u64(d + 4);
    if (ts > static_cast<std::uint64_t>(INT64_MAX))
      throw CodecError(CodecFault::InvalidField, 4, "timestamp out of range");
    s.timestamp = static_cast<Micros>(ts);
    std::array<float, 9> ch{};
    for (int i = 0; i < 9; ++i) {
      ch[i] = get_f32(d + 12 + 4 * i);
      if (!std::isfinite(ch[i]))
        throw CodecError(CodecFault::InvalidField, 12 + 4 * static_cast<std::size_t>(i),
                         "non-finite channel value");
    }
    s.accel = {ch[0], ch[1], ch[2]};
    s.gyro = {ch[3], ch[4], ch[5]};
    s.mag = {ch[6], ch[7], ch[8]};
    return {s, kImuPacketSize};
  }
  if (b.size() < kFrameHeaderSize)
    throw CodecError(CodecFault::Truncated, b.size(), "frame header needs 16 bytes");
  if (d[3] > 1) throw CodecError(CodecFault::InvalidField, 3, "camera id " + std::to_string(d[3]));
  std::uint64_t ts = get_u64(d + 4);
  if (ts > static_cast<std::uint64_t>(INT64_MAX))
    throw CodecError(CodecFault::InvalidField, 4, "timestamp out of range");
  TactileFrame f;
  f.camera = static_cast<CameraId>(d[3]);
  f.timestamp = static_cast<Micros>(ts);
  f.width = get_u16(d + 12);
  f.height = get_u16(d + 14);
  std::size_t n = static_cast<std::size_t>(f.width) * static_cast<std::size_t>(f.height);
  if (b.size() - kFrameHeaderSize < n)
    throw CodecError(CodecFault::Truncated, b.size(),
                     "frame body needs " + std::to_string(n) + " bytes, have " +
                         std::to_string(b.size() - kFrameHeaderSize));
  f.pixels.assign(d + kFrameHeaderSize, d + kFrameHeaderSize + n);
  return {std::move(f), kFrameHeaderSize + n};
}

Packet decode_packet(std::span<const std::uint8_t> b) {
  DecodedPacket r = decode_prefix(b);
  if (r.consumed != b.size())
    throw CodecError(CodecFault::Truncated, r.consumed,
                     std::to_string(b.size() - r.consumed) + " trailing bytes");
  return std::move(r.packet);
}

}  // namespace mmhar::ingest
