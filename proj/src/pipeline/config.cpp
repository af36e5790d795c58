#include "mmhar/pipeline/config.hpp"

#include <sstream>

#include "mmhar/core/errors.hpp"

namespace mmhar::pipeline {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void PipelineConfig::validate() const {
  if (window < 2) throw ConfigError("pipeline: window must be >= 2");
  if (!(frame_rate_hz > 0.0)) throw ConfigError("pipeline: frame_rate_hz must be positive");
  if (tolerance_us <= 0) throw ConfigError("pipeline: tolerance_us must be positive");
  if (staleness_budget_us <= 0) throw ConfigError("pipeline: staleness_budget_us must be positive");
  if (side < 8) throw ConfigError("pipeline: side must be >= 8");
  if (!(ranges.accel_g > 0.0 && ranges.gyro_dps > 0.0 && ranges.mag_ut > 0.0))
    throw ConfigError("pipeline: full-scale ranges must be positive");
  if (!(nominal_span_s > 0.0) || span_tolerance < 0.0) throw ConfigError("pipeline: bad window span settings");
  if (stats.std < 0.0) throw ConfigError("pipeline: stats_std must be >= 0");
}

PipelineConfig PipelineConfig::from_document(const KvDocument& doc) {
  doc.reject_unknown({"window", "frame_rate_hz", "tolerance_us", "staleness_budget_us", "nominal_span_s",
                      "span_tolerance", "side", "accel_fs_g", "gyro_fs_dps", "mag_fs_ut", "stats_mean",
                      "stats_std", "pairing"});
  PipelineConfig c;
  c.window = static_cast<int>(doc.get_int("window", c.window));
  c.frame_rate_hz = doc.get_double("frame_rate_hz", c.frame_rate_hz);
  c.tolerance_us = doc.get_int("tolerance_us", c.tolerance_us);
  c.staleness_budget_us = doc.get_int("staleness_budget_us", c.staleness_budget_us);
  c.nominal_span_s = doc.get_double("nominal_span_s", c.nominal_span_s);
  c.span_tolerance = doc.get_double("span_tolerance", c.span_tolerance);
  c.side = static_cast<int>(doc.get_int("side", c.side));
  c.ranges.accel_g = doc.get_double("accel_fs_g", c.ranges.accel_g);
  c.ranges.gyro_dps = doc.get_double("gyro_fs_dps", c.ranges.gyro_dps);
  c.ranges.mag_ut = doc.get_double("mag_fs_ut", c.ranges.mag_ut);
  c.stats.mean = doc.get_double("stats_mean", c.stats.mean);
  c.stats.std = doc.get_double("stats_std", c.stats.std);
  std::string mode = doc.get_or("pairing", "nearest");
  if (mode == "nearest") c.pairing = PairingMode::Nearest;
  else if (mode == "causal") c.pairing = PairingMode::Causal;
  else throw ConfigError("pipeline: pairing must be 'nearest' or 'causal'");
  c.validate();
  return c;
}

KvDocument PipelineConfig::to_document() const {
  KvDocument d;
  d.set("window", std::to_string(window));
  d.set("frame_rate_hz", num(frame_rate_hz));
  d.set("tolerance_us", std::to_string(tolerance_us));
  d.set("staleness_budget_us", std::to_string(staleness_budget_us));
  d.set("nominal_span_s", num(nominal_span_s));
  d.set("span_tolerance", num(span_tolerance));
  d.set("side", std::to_string(side));
  d.set("accel_fs_g", num(ranges.accel_g));
  d.set("gyro_fs_dps", num(ranges.gyro_dps));
  d.set("mag_fs_ut", num(ranges.mag_ut));
  d.set("stats_mean", num(stats.mean));
  d.set("stats_std", num(stats.std));
  d.set("pairing", pairing == PairingMode::Nearest ? "nearest" : "causal");
  return d;
}

}  // namespace mmhar::pipeline
