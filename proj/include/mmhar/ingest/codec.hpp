#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mmhar/core/errors.hpp"
#include "mmhar/core/types.hpp"

namespace mmhar::ingest {

inline constexpr std::uint8_t kMagic = 0xA7;
inline constexpr std::uint8_t kVersion = 0x01;

enum class PacketKind : std::uint8_t { Imu = 0x01, Frame = 0x02 };

// Channel-level trailer marking a clean end of stream. Never produced by
// encode_packet and rejected by decode_packet.
inline constexpr std::uint8_t kEndOfStreamKind = 0xFF;

inline constexpr std::size_t kHeaderSize = 3;
inline constexpr std::size_t kImuPacketSize = kHeaderSize + 1 + 8 + 9 * 4;  // 48
inline constexpr std::size_t kFrameHeaderSize = kHeaderSize + 1 + 8 + 2 + 2;

using Packet = std::variant<ImuSample, TactileFrame>;

Micros packet_timestamp(const Packet& p);

enum class CodecFault { BadMagic, BadVersion, BadKind, Truncated, InvalidField };

std::string_view to_string(CodecFault f);

// Structured decode failure; `offset` is the byte offset of the problem
// inside the buffer handed to the decoder.
class CodecError : public DataError {
 public:
  CodecError(CodecFault fault, std::size_t offset, const std::string& detail);
  CodecFault fault() const noexcept { return fault_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  CodecFault fault_;
  std::size_t offset_;
};

void encode_packet_into(const Packet& p, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> encode_packet(const Packet& p);

struct DecodedPacket {
  Packet packet;
  std::size_t consumed = 0;
};

// Decodes one packet from the front of `bytes`; trailing bytes are allowed.
DecodedPacket decode_prefix(std::span<const std::uint8_t> bytes);

// Decodes exactly one packet; trailing bytes are a Truncated-class error
// reported at the first unused byte.
Packet decode_packet(std::span<const std::uint8_t> bytes);

// Total packet size implied by a header (and frame dimensions, when the
// buffer holds them). Returns 0 if more bytes are needed to tell.
std::size_t expected_size(std::span<const std::uint8_t> bytes);

}  // namespace mmhar::ingest
