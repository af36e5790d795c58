#pragma once

#include <array>
#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "mmhar/core/types.hpp"
#include "mmhar/pipeline/config.hpp"
#include "mmhar/pipeline/preprocess.hpp"

namespace mmhar::pipeline {

// One Top frame with its paired Bottom frame and per-module IMU readings,
// before preprocessing.
struct AlignedSample {
  Micros timestamp = 0;
  std::shared_ptr<const TactileFrame> top;
  std::shared_ptr<const TactileFrame> bottom;
  std::array<ImuSample, kImuModules> imu{};
  std::array<bool, kImuModules> stale{};
};

// Classifier-ready sample at camera rate.
struct SyncedSample {
  Micros timestamp = 0;
  ProcessedFrame top;
  ProcessedFrame bottom;
  std::array<float, kImuBlockWidth> imu{};  // module-major, values in [-1, 1]
  std::array<bool, kImuModules> stale{};
};

struct SyncCounters {
  std::size_t emitted = 0;
  std::size_t dropped_no_bottom = 0;
  std::size_t dropped_no_imu = 0;
  std::size_t stale_module_samples = 0;
  std::size_t imu_discarded = 0;
};

struct SyncOptions {
  Micros tolerance_us = 16'667;
  Micros staleness_budget_us = 100'000;
  PairingMode mode = PairingMode::Nearest;

  static SyncOptions from(const PipelineConfig& c) { return {c.tolerance_us, c.staleness_budget_us, c.pairing}; }
};

// Streaming aligner. Producers push in per-stream timestamp order; a Top
// frame is resolved once the Bottom and IMU streams have advanced far enough
// past it that no later arrival can change its pairing, so the output does
// not depend on how the three streams interleave.
class Synchronizer {
 public:
  explicit Synchronizer(SyncOptions options);

  void push_imu(const ImuSample& s);
  void push_top(std::shared_ptr<const TactileFrame> f);
  void push_bottom(std::shared_ptr<const TactileFrame> f);
  void finish_imu();
  void finish_top();
  void finish_bottom();

  // Resolves every Top frame that is ready. Throws DataError when a module's
  // held-last value is older than the staleness budget.
  std::vector<AlignedSample> poll();
  bool done() const;

  const SyncCounters& counters() const { return counters_; }

 private:
  bool ready(Micros t) const;
  std::optional<AlignedSample> resolve(const std::shared_ptr<const TactileFrame>& top);

  SyncOptions opt_;
  std::deque<std::shared_ptr<const TactileFrame>> tops_;
  std::deque<std::shared_ptr<const TactileFrame>> bottoms_;
  std::array<std::deque<ImuSample>, kImuModules> imu_;
  Micros last_top_ = INT64_MIN;
  Micros bottom_progress_ = INT64_MIN;
  Micros imu_progress_ = INT64_MIN;
  bool top_done_ = false;
  bool bottom_done_ = false;
  bool imu_done_ = false;
  SyncCounters counters_;
};

// Batch convenience over Synchronizer. The frame pointers in the result
// borrow from `top` / `bottom`, which must outlive it.
std::vector<AlignedSample> synchronize(const std::vector<ImuSample>& imu, const std::vector<TactileFrame>& top,
                                       const std::vector<TactileFrame>& bottom, SyncOptions options,
                                       SyncCounters* counters = nullptr);

// Preprocesses aligned samples into SyncedSamples.
class SampleBuilder {
 public:
  SampleBuilder(const SensorGeometry& geometry, int source_width, int source_height, const PipelineConfig& config);

  // Frames in [0, 1]; standardize later with split statistics.
  SyncedSample build_unit(const AlignedSample& a);
  // Frames standardized with the configured statistics.
  SyncedSample build(const AlignedSample& a);

  std::size_t saturated_channels() const { return saturated_; }
  const FramePreprocessor& frames() const { return frames_; }

 private:
  FramePreprocessor frames_;
  FullScaleRanges ranges_;
  SplitStats stats_;
  std::size_t saturated_ = 0;
};

}  // namespace mmhar::pipeline
