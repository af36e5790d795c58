#pragma once

#include <string>

#include "mmhar/core/kv_document.hpp"
#include "mmhar/core/types.hpp"

namespace mmhar::pipeline {

enum class PairingMode {
  Nearest,  // symmetric nearest within tolerance (offline / replay)
  Causal,   // latest at-or-before (live)
};

struct FullScaleRanges {
  double accel_g = 8.0;
  double gyro_dps = 2000.0;
  double mag_ut = 4900.0;
};

// Scalar statistics of a dataset split. std == 0 is replaced by 1e-6.
struct SplitStats {
  double mean = 0.0;
  double std = 1.0;
  double effective_std() const { return std > 0.0 ? std : 1e-6; }
};

struct PipelineConfig {
  int window = 90;
  double frame_rate_hz = 30.0;
  Micros tolerance_us = 16'667;
  Micros staleness_budget_us = 100'000;
  double nominal_span_s = 3.0;
  double span_tolerance = 0.10;
  int side = 32;
  FullScaleRanges ranges;
  SplitStats stats;
  PairingMode pairing = PairingMode::Nearest;

  void validate() const;
  // Keys: window, frame_rate_hz, tolerance_us, staleness_budget_us,
  // nominal_span_s, span_tolerance, side, accel_fs_g, gyro_fs_dps, mag_fs_ut,
  // stats_mean, stats_std, pairing (nearest|causal). Unknown keys rejected.
  static PipelineConfig from_document(const KvDocument& doc);
  KvDocument to_document() const;
};

}  // namespace mmhar::pipeline
