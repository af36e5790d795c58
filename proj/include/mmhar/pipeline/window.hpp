#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "mmhar/pipeline/sync.hpp"

namespace mmhar::pipeline {

// Immutable snapshot of `length` consecutive samples.
struct Window {
  std::vector<std::shared_ptr<const SyncedSample>> samples;

  std::size_t size() const { return samples.size(); }
  Micros first() const { return samples.front()->timestamp; }
  Micros last() const { return samples.back()->timestamp; }
  Micros span() const { return last() - first(); }
};

// Dense tensors consumed by the classifier: top/bottom are T x side x side,
// imu is T x 72 (module-major channels).
struct ModelInput {
  int frames = 0;
  int side = 0;
  std::vector<float> top;
  std::vector<float> bottom;
  std::vector<float> imu;
};

ModelInput to_model_input(const Window& w);

// Stride-1 sliding buffer. The first window is emitted on the length-th
// push, then one per push. Windows whose span is outside nominal +- tolerance
// are withheld and counted.
class WindowBuffer {
 public:
  WindowBuffer(std::size_t length, double nominal_span_s, double span_tolerance);
  explicit WindowBuffer(const PipelineConfig& c) : WindowBuffer(static_cast<std::size_t>(c.window), c.nominal_span_s, c.span_tolerance) {}

  // Throws OrderError when s is not newer than the previous push.
  std::optional<Window> push(std::shared_ptr<const SyncedSample> s);

  std::size_t pushed() const { return pushed_; }
  std::size_t emitted() const { return emitted_; }
  std::size_t rejected_span() const { return rejected_span_; }
  std::size_t length() const { return length_; }

 private:
  std::size_t length_;
  Micros min_span_;
  Micros max_span_;
  std::deque<std::shared_ptr<const SyncedSample>> buf_;
  std::size_t pushed_ = 0;
  std::size_t emitted_ = 0;
  std::size_t rejected_span_ = 0;
};

}  // namespace mmhar::pipeline
