#include "mmhar/pipeline/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmhar/core/errors.hpp"

namespace mmhar::pipeline {

CropRect crop_rect(const SensorGeometry& g, CameraId camera, int width, int height) {
  const PixelPoint& c = g.ring_center(camera);
  const double r = g.outer_ring_radius_px;
  CropRect rect{static_cast<int>(std::lround(c.y - r)), static_cast<int>(std::lround(c.x - r)),
                static_cast<int>(std::lround(2.0 * r))};
  if (rect.side <= 0 || rect.row0 < 0 || rect.col0 < 0 || rect.row0 + rect.side > height ||
      rect.col0 + rect.side > width) {
    throw ConfigError("crop: outer ring (center " + std::to_string(c.x) + "," + std::to_string(c.y) +
                      ", radius " + std::to_string(r) + ") exceeds " + std::to_string(width) + "x" +
                      std::to_string(height) + " frame");
  }
  return rect;
}

TactileFrame crop_square(const TactileFrame& f, const CropRect& rect) {
  if (rect.row0 < 0 || rect.col0 < 0 || rect.row0 + rect.side > f.height || rect.col0 + rect.side > f.width)
    throw DataError("crop: frame smaller than crop mask");
  TactileFrame out;
  out.camera = f.camera;
  out.timestamp = f.timestamp;
  out.width = out.height = rect.side;
  out.pixels.resize(static_cast<std::size_t>(rect.side) * rect.side);
  for (int r = 0; r < rect.side; ++r) {
    const std::uint8_t* src = f.pixels.data() + static_cast<std::size_t>(rect.row0 + r) * f.width + rect.col0;
    std::copy(src, src + rect.side, out.pixels.begin() + static_cast<std::ptrdiff_t>(r) * rect.side);
  }
  return out;
}

ProcessedFrame resize_unit(const TactileFrame& sq, int side) {
  if (side < 8) throw ConfigError("resize: side must be >= 8");
  ProcessedFrame out;
  out.timestamp = sq.timestamp;
  out.side = side;
  out.pixels.resize(static_cast<std::size_t>(side) * side);
  const double sy = static_cast<double>(sq.height) / side;
  const double sx = static_cast<double>(sq.width) / side;
  const float inv = 1.0f / 255.0f;
  for (int r = 0; r < side; ++r) {
    double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(sq.height - 1));
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, sq.height - 1);
    double wy = fy - y0;
    for (int c = 0; c < side; ++c) {
      double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(sq.width - 1));
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, sq.width - 1);
      double wx = fx - x0;
      double top = sq.at(y0, x0) * (1.0 - wx) + sq.at(y0, x1) * wx;
      double bot = sq.at(y1, x0) * (1.0 - wx) + sq.at(y1, x1) * wx;
      out.pixels[static_cast<std::size_t>(r) * side + c] = static_cast<float>(top * (1.0 - wy) + bot * wy) * inv;
    }
  }
  return out;
}

void standardize(std::span<float> px, const SplitStats& stats) {
  const float mean = static_cast<float>(stats.mean);
  const float inv = static_cast<float>(1.0 / stats.effective_std());
  for (float& v : px) v = (v - mean) * inv;
}

ProcessedFrame to_model_input(const TactileFrame& square, int side, const SplitStats& stats) {
  ProcessedFrame f = resize_unit(square, side);
  standardize(f.pixels, stats);
  return f;
}

std::array<float, kImuChannels> normalize_imu(const ImuSample& s, const FullScaleRanges& ranges,
                                              std::size_t* saturated) {
  std::array<float, kImuChannels> out{};
  auto ch = s.channels();
  for (int i = 0; i < kImuChannels; ++i) {
    double fs = i < 3 ? ranges.accel_g : (i < 6 ? ranges.gyro_dps : ranges.mag_ut);
    double v = ch[static_cast<std::size_t>(i)] / fs;
    if (v > 1.0 || v < -1.0) {
      v = std::clamp(v, -1.0, 1.0);
      if (saturated) ++*saturated;
    }
    out[static_cast<std::size_t>(i)] = static_cast<float>(v);
  }
  return out;
}

FramePreprocessor::FramePreprocessor(const SensorGeometry& geometry, int width, int height, int side)
    : rects_{crop_rect(geometry, CameraId::Top, width, height), crop_rect(geometry, CameraId::Bottom, width, height)},
      width_(width),
      height_(height),
      side_(side) {
  if (side < 8) throw ConfigError("preprocess: side must be >= 8");
}

ProcessedFrame FramePreprocessor::prepare(const TactileFrame& raw) const {
  if (raw.width != width_ || raw.height != height_)
    throw DataError("preprocess: frame is " + std::to_string(raw.width) + "x" + std::to_string(raw.height) +
                    ", configured for " + std::to_string(width_) + "x" + std::to_string(height_));
  return resize_unit(crop_square(raw, rect(raw.camera)), side_);
}

}  // namespace mmhar::pipeline
