#include "mmhar/pipeline/sync.hpp"

#include <string>

#include "mmhar/core/errors.hpp"

namespace mmhar::pipeline {

namespace {

Micros dist(Micros a, Micros b) { return a > b ? a - b : b - a; }

}  // namespace

Synchronizer::Synchronizer(SyncOptions options) : opt_(options) {
  if (opt_.tolerance_us <= 0 || opt_.staleness_budget_us <= 0)
    throw ConfigError("synchronize: tolerance and staleness budget must be positive");
}

void Synchronizer::push_imu(const ImuSample& s) {
  if (s.module_id >= kImuModules) throw DataError("synchronize: IMU module id out of range");
  if (s.timestamp < imu_progress_)
    throw OrderError("synchronize: IMU timestamp " + std::to_string(s.timestamp) + " precedes " +
                         std::to_string(imu_progress_),
                     0);
  imu_progress_ = s.timestamp;
  imu_[s.module_id].push_back(s);
}

void Synchronizer::push_top(std::shared_ptr<const TactileFrame> f) {
  if (f->timestamp < last_top_)
    throw OrderError("synchronize: top timestamp " + std::to_string(f->timestamp) + " precedes " +
                         std::to_string(last_top_),
                     0);
  last_top_ = f->timestamp;
  tops_.push_back(std::move(f));
}

void Synchronizer::push_bottom(std::shared_ptr<const TactileFrame> f) {
  if (f->timestamp < bottom_progress_)
    throw OrderError("synchronize: bottom timestamp " + std::to_string(f->timestamp) + " precedes " +
                         std::to_string(bottom_progress_),
                     0);
  bottom_progress_ = f->timestamp;
  bottoms_.push_back(std::move(f));
}

void Synchronizer::finish_imu() { imu_done_ = true; }
void Synchronizer::finish_top() { top_done_ = true; }
void Synchronizer::finish_bottom() { bottom_done_ = true; }

bool Synchronizer::done() const { return top_done_ && tops_.empty(); }

bool Synchronizer::ready(Micros t) const {
  const Micros tol = opt_.tolerance_us;
  bool bottom_ok = bottom_done_ || bottom_progress_ > t + tol;
  Micros horizon = opt_.mode == PairingMode::Nearest ? tol : 0;
  bool imu_ok = imu_done_ || imu_progress_ > t + horizon;
  return bottom_ok && imu_ok;
}

std::optional<AlignedSample> Synchronizer::resolve(const std::shared_ptr<const TactileFrame>& top) {
  const Micros t = top->timestamp;
  const Micros tol = opt_.tolerance_us;

  while (!bottoms_.empty() && bottoms_.front()->timestamp < t - tol) bottoms_.pop_front();
  std::shared_ptr<const TactileFrame> bottom;
  for (const auto& b : bottoms_) {
    if (b->timestamp > t + tol) break;
    // Strict comparison keeps the earlier frame on ties.
    if (!bottom || dist(b->timestamp, t) < dist(bottom->timestamp, t)) bottom = b;
  }

  AlignedSample out;
  out.timestamp = t;
  out.top = top;
  for (int m = 0; m < kImuModules; ++m) {
    auto& q = imu_[static_cast<std::size_t>(m)];
    while (q.size() >= 2 && q[1].timestamp <= t && q[0].timestamp < t - tol) {
      q.pop_front();
      ++counters_.imu_discarded;
    }
    const ImuSample* held = nullptr;  // latest at-or-before
    const ImuSample* nearest = nullptr;
    for (const auto& s : q) {
      if (s.timestamp <= t) held = &s;
      if (opt_.mode == PairingMode::Nearest && dist(s.timestamp, t) <= tol &&
          (!nearest || dist(s.timestamp, t) < dist(nearest->timestamp, t)))
        nearest = &s;
      if (s.timestamp > t + tol) break;
    }
    const ImuSample* chosen = nullptr;
    if (opt_.mode == PairingMode::Causal) {
      if (held && t - held->timestamp <= tol) chosen = held;
    } else {
      chosen = nearest;
    }
    if (!chosen) {
      if (!held) {
        ++counters_.dropped_no_imu;
        return std::nullopt;
      }
      Micros age = t - held->timestamp;
      if (age > opt_.staleness_budget_us)
        throw DataError("synchronize: IMU module " + std::to_string(m) + " held for " + std::to_string(age) +
                        " us at frame " + std::to_string(t) + ", beyond staleness budget " +
                        std::to_string(opt_.staleness_budget_us) + " us");
      chosen = held;
      out.stale[static_cast<std::size_t>(m)] = true;
      ++counters_.stale_module_samples;
    }
    out.imu[static_cast<std::size_t>(m)] = *chosen;
  }
  if (!bottom) {
    ++counters_.dropped_no_bottom;
    return std::nullopt;
  }
  out.bottom = std::move(bottom);
  return out;
}

std::vector<AlignedSample> Synchronizer::poll() {
  std::vector<AlignedSample> out;
  while (!tops_.empty() && ready(tops_.front()->timestamp)) {
    auto top = std::move(tops_.front());
    tops_.pop_front();
    if (auto a = resolve(top)) {
      out.push_back(std::move(*a));
      ++counters_.emitted;
    }
  }
  return out;
}

std::vector<AlignedSample> synchronize(const std::vector<ImuSample>& imu, const std::vector<TactileFrame>& top,
                                       const std::vector<TactileFrame>& bottom, SyncOptions options,
                                       SyncCounters* counters) {
  Synchronizer sync(options);
  for (const auto& s : imu) sync.push_imu(s);
  // Non-owning aliases: outputs borrow the caller's frames.
  for (const auto& f : bottom) sync.push_bottom(std::shared_ptr<const TactileFrame>(std::shared_ptr<void>(), &f));
  for (const auto& f : top) sync.push_top(std::shared_ptr<const TactileFrame>(std::shared_ptr<void>(), &f));
  sync.finish_imu();
  sync.finish_bottom();
  sync.finish_top();
  auto out = sync.poll();
  if (counters) *counters = sync.counters();
  return out;
}

SampleBuilder::SampleBuilder(const SensorGeometry& geometry, int w, int h, const PipelineConfig& config)
    : frames_(geometry, w, h, config.side), ranges_(config.ranges), stats_(config.stats) {}

SyncedSample SampleBuilder::build_unit(const AlignedSample& a) {
  SyncedSample s;
  s.timestamp = a.timestamp;
  s.top = frames_.prepare(*a.top);
  s.bottom = frames_.prepare(*a.bottom);
  s.stale = a.stale;
  for (int m = 0; m < kImuModules; ++m) {
    auto v = normalize_imu(a.imu[static_cast<std::size_t>(m)], ranges_, &saturated_);
    std::copy(v.begin(), v.end(), s.imu.begin() + m * kImuChannels);
  }
  return s;
}

SyncedSample SampleBuilder::build(const AlignedSample& a) {
  SyncedSample s = build_unit(a);
  standardize(s.top.pixels, stats_);
  standardize(s.bottom.pixels, stats_);
  return s;
}

}  // namespace mmhar::pipeline
