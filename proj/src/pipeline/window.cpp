#include "mmhar/pipeline/window.hpp"

#include <cmath>
#include <string>

#include "mmhar/core/errors.hpp"

namespace mmhar::pipeline {

ModelInput to_model_input(const Window& w) {
  ModelInput in;
  in.frames = static_cast<int>(w.size());
  in.side = w.samples.front()->top.side;
  const std::size_t px = static_cast<std::size_t>(in.side) * in.side;
  in.top.reserve(px * w.size());
  in.bottom.reserve(px * w.size());
  in.imu.reserve(static_cast<std::size_t>(kImuBlockWidth) * w.size());
  for (const auto& s : w.samples) {
    if (s->top.side != in.side || s->bottom.side != in.side) throw DataError("window: inconsistent frame sides");
    in.top.insert(in.top.end(), s->top.pixels.begin(), s->top.pixels.end());
    in.bottom.insert(in.bottom.end(), s->bottom.pixels.begin(), s->bottom.pixels.end());
    in.imu.insert(in.imu.end(), s->imu.begin(), s->imu.end());
  }
  return in;
}

WindowBuffer::WindowBuffer(std::size_t length, double nominal_span_s, double tol)
    : length_(length),
      min_span_(static_cast<Micros>(std::floor(nominal_span_s * (1.0 - tol) * 1e6))),
      max_span_(static_cast<Micros>(std::ceil(nominal_span_s * (1.0 + tol) * 1e6))) {
  if (length_ < 1) throw ConfigError("window: length must be positive");
}

std::optional<Window> WindowBuffer::push(std::shared_ptr<const SyncedSample> s) {
  if (!buf_.empty() && s->timestamp <= buf_.back()->timestamp)
    throw OrderError("window: sample at " + std::to_string(s->timestamp) + " does not follow " +
                         std::to_string(buf_.back()->timestamp),
                     pushed_);
  buf_.push_back(std::move(s));
  ++pushed_;
  if (buf_.size() > length_) buf_.pop_front();
  if (buf_.size() < length_) return std::nullopt;
  Window w{std::vector<std::shared_ptr<const SyncedSample>>(buf_.begin(), buf_.end())};
  if (length_ > 1 && (w.span() < min_span_ || w.span() > max_span_)) {
    ++rejected_span_;
    return std::nullopt;
  }
  ++emitted_;
  return w;
}

}  // namespace mmhar::pipeline
