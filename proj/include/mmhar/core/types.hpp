#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace mmhar {

// Integer microseconds on the shared monotonic clock.
using Micros = std::int64_t;

inline constexpr int kImuModules = 8;
inline constexpr int kImuChannels = 9;  // accel xyz, gyro xyz, mag xyz
inline constexpr int kImuBlockWidth = kImuModules * kImuChannels;

struct ImuSample {
  std::uint8_t module_id = 0;
  Micros timestamp = 0;
  std::array<float, 3> accel{};  // g
  std::array<float, 3> gyro{};   // deg/s
  std::array<float, 3> mag{};    // uT

  std::array<float, kImuChannels> channels() const {
    return {accel[0], accel[1], accel[2], gyro[0], gyro[1], gyro[2], mag[0], mag[1], mag[2]};
  }
  bool valid() const;
  friend bool operator==(const ImuSample&, const ImuSample&) = default;
};

enum class CameraId : std::uint8_t { Top = 0, Bottom = 1 };

// Raw single-channel 8-bit camera frame, row-major.
struct TactileFrame {
  CameraId camera = CameraId::Top;
  Micros timestamp = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  friend bool operator==(const TactileFrame&, const TactileFrame&) = default;
};

// Square single-channel frame after cropping/resizing (and optionally
// standardization).
struct ProcessedFrame {
  Micros timestamp = 0;
  int side = 0;
  std::vector<float> pixels;

  float at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * side + col]; }
  friend bool operator==(const ProcessedFrame&, const ProcessedFrame&) = default;
};

struct PixelPoint {
  double x = 0.0;  // column
  double y = 0.0;  // row
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct SensorGeometry {
  double cylinder_height_cm = 23.0;
  double cylinder_radius_cm = 4.0;
  int marker_rows = 8;
  int marker_cols = 16;
  std::array<PixelPoint, 2> outer_ring_center{PixelPoint{128.0, 72.0}, PixelPoint{128.0, 72.0}};
  double outer_ring_radius_px = 60.0;

  double lateral_area_cm2() const {
    return 2.0 * M_PI * cylinder_radius_cm * cylinder_height_cm;
  }
  const PixelPoint& ring_center(CameraId cam) const {
    return outer_ring_center[static_cast<std::size_t>(cam)];
  }
  // Throws ConfigError on non-positive dimensions.
  void validate() const;
  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

enum class Hand : std::uint8_t { Left, Right };

}  // namespace mmhar
