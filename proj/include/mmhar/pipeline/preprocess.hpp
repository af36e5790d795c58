#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <span>

#include "mmhar/core/types.hpp"
#include "mmhar/pipeline/config.hpp"

namespace mmhar::pipeline {

struct CropRect {
  int row0 = 0;
  int col0 = 0;
  int side = 0;
  friend bool operator==(const CropRect&, const CropRect&) = default;
};

// Square of side 2*ring radius centred on the camera's outer marker ring.
// Throws ConfigError if it does not fit inside a width x height frame.
CropRect crop_rect(const SensorGeometry& geometry, CameraId camera, int width, int height);

TactileFrame crop_square(const TactileFrame& frame, const CropRect& rect);

// Luminance + bilinear resize to side x side, scaled to [0, 1].
ProcessedFrame resize_unit(const TactileFrame& square, int side);

void standardize(std::span<float> pixels, const SplitStats& stats);

// resize_unit followed by standardization.
ProcessedFrame to_model_input(const TactileFrame& square, int side, const SplitStats& stats);

// value / full scale, clamped to [-1, 1]. Clamped channels are added to
// `saturated` when given.
std::array<float, kImuChannels> normalize_imu(const ImuSample& s, const FullScaleRanges& ranges,
                                              std::size_t* saturated = nullptr);

// Fixed per-camera crop masks plus resize, built once at setup.
class FramePreprocessor {
 public:
  FramePreprocessor(const SensorGeometry& geometry, int source_width, int source_height, int side);
  // Crop + resize to the unit interval (no standardization).
  ProcessedFrame prepare(const TactileFrame& raw) const;
  const CropRect& rect(CameraId cam) const { return rects_[static_cast<std::size_t>(cam)]; }
  int side() const { return side_; }

 private:
  std::array<CropRect, 2> rects_;
  int width_;
  int height_;
  int side_;
};

}  // namespace mmhar::pipeline
