#pragma once

// Reference implementations written independently of the library, used as
// test oracles.

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "mmhar/core/action.hpp"
#include "mmhar/core/types.hpp"
#include "mmhar/eval/metrics.hpp"

namespace oracle {

using mmhar::ActionClass;
using mmhar::Micros;

// Hand-assembled IMU packet: A7 01 01 | id | ts u64 LE | 9 x f32 LE.
inline std::vector<std::uint8_t> imu_bytes(std::uint8_t id, std::uint64_t ts, const std::array<float, 9>& ch) {
  std::vector<std::uint8_t> b = {0xA7, 0x01, 0x01, id};
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>((ts >> (8 * i)) & 0xFF));
  for (float f : ch) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xFF));
  }
  return b;
}

// Frame packet: A7 01 02 | cam | ts u64 LE | w u16 LE | h u16 LE | pixels.
inline std::vector<std::uint8_t> frame_bytes(std::uint8_t cam, std::uint64_t ts, std::uint16_t w, std::uint16_t h,
                                             const std::vector<std::uint8_t>& px) {
  std::vector<std::uint8_t> b = {0xA7, 0x01, 0x02, cam};
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>((ts >> (8 * i)) & 0xFF));
  b.push_back(static_cast<std::uint8_t>(w & 0xFF));
  b.push_back(static_cast<std::uint8_t>(w >> 8));
  b.push_back(static_cast<std::uint8_t>(h & 0xFF));
  b.push_back(static_cast<std::uint8_t>(h >> 8));
  b.insert(b.end(), px.begin(), px.end());
  return b;
}

// Brute-force IMU pairing for one frame over all samples of one module.
// kind: 0 = paired within tolerance, 1 = held stale, 2 = no earlier sample,
// 3 = staleness violation.
struct Pairing {
  int kind = 2;
  Micros chosen = 0;
};

inline Pairing pair_imu(const std::vector<Micros>& ts, Micros t, Micros tol, Micros budget, bool causal) {
  Pairing p;
  std::optional<Micros> best, held;
  for (Micros s : ts) {
    const Micros d = s > t ? s - t : t - s;
    if (causal) {
      if (s <= t && d <= tol && (!best || s > *best)) best = s;
    } else if (d <= tol) {
      const Micros bd = best ? (*best > t ? *best - t : t - *best) : 0;
      if (!best || d < bd || (d == bd && s < *best)) best = s;
    }
    if (s <= t && (!held || s >= *held)) held = s;
  }
  if (best) return {0, *best};
  if (!held) return {2, 0};
  if (t - *held > budget) return {3, *held};
  return {1, *held};
}

inline std::optional<Micros> pair_bottom(const std::vector<Micros>& ts, Micros t, Micros tol) {
  std::optional<Micros> best;
  for (Micros s : ts) {
    const Micros d = s > t ? s - t : t - s;
    if (d > tol) continue;
    const Micros bd = best ? (*best > t ? *best - t : t - *best) : 0;
    if (!best || d < bd) best = s;
  }
  return best;
}

struct ExpectedSample {
  Micros t = 0;
  Micros bottom = 0;
  std::array<Micros, 8> imu{};
  std::array<bool, 8> stale{};
};

struct ExpectedSync {
  bool error = false;  // a staleness violation occurs
  std::vector<ExpectedSample> samples;  // up to the violation
};

// Frame-by-frame brute force over the complete logs.
inline ExpectedSync expected_sync(const std::array<std::vector<Micros>, 8>& imu, const std::vector<Micros>& top,
                                  const std::vector<Micros>& bottom, Micros tol, Micros budget, bool causal) {
  ExpectedSync out;
  for (Micros t : top) {
    ExpectedSample e;
    e.t = t;
    bool dropped = false;
    for (int m = 0; m < 8 && !dropped; ++m) {
      auto p = pair_imu(imu[static_cast<std::size_t>(m)], t, tol, budget, causal);
      if (p.kind == 3) {
        out.error = true;
        return out;
      }
      if (p.kind == 2) dropped = true;
      e.imu[static_cast<std::size_t>(m)] = p.chosen;
      e.stale[static_cast<std::size_t>(m)] = p.kind == 1;
    }
    if (dropped) continue;
    auto b = pair_bottom(bottom, t, tol);
    if (!b) continue;
    e.bottom = *b;
    out.samples.push_back(e);
  }
  return out;
}

// Per-frame exhaustive case analysis of the event categories, then merged
// into constant (gt, pred) segments.
inline std::vector<mmhar::eval::SegmentScore> score_frames(const std::vector<ActionClass>& gt,
                                                            const std::vector<ActionClass>& pred,
                                                            const std::vector<Micros>& grid, Micros end) {
  using mmhar::eval::Category;
  const auto idle = ActionClass::Idle;
  const int n = static_cast<int>(gt.size());
  std::vector<Category> cat(static_cast<std::size_t>(n));
  auto u = [](int i) { return static_cast<std::size_t>(i); };
  for (int i = 0; i < n; ++i) {
    if (gt[u(i)] != idle) {
      int lo = i, hi = i;
      while (lo > 0 && gt[u(lo - 1)] == gt[u(i)]) --lo;
      while (hi + 1 < n && gt[u(hi + 1)] == gt[u(i)]) ++hi;
      int first = -1, last = -1;
      for (int k = lo; k <= hi; ++k)
        if (pred[u(k)] == gt[u(k)]) {
          if (first < 0) first = k;
          last = k;
        }
      if (pred[u(i)] == gt[u(i)]) cat[u(i)] = Category::TP;
      else if (first < 0) cat[u(i)] = Category::Deletion;
      else if (i < first) cat[u(i)] = Category::UnderfillStart;
      else if (i > last) cat[u(i)] = Category::UnderfillEnd;
      else cat[u(i)] = Category::Fragmentation;
      continue;
    }
    if (pred[u(i)] == idle) {
      cat[u(i)] = Category::TN;
      continue;
    }
    int lo = i, hi = i;
    while (lo > 0 && pred[u(lo - 1)] != idle) --lo;
    while (hi + 1 < n && pred[u(hi + 1)] != idle) ++hi;
    bool any_tp = false, before = false, after = false;
    for (int k = lo; k <= hi; ++k) {
      if (gt[u(k)] == idle) continue;
      if (gt[u(k)] == pred[u(k)]) any_tp = true;
      (k < i ? before : after) = true;
    }
    if (!any_tp) cat[u(i)] = Category::Insertion;
    else if (before && after) cat[u(i)] = Category::Merge;
    else if (after) cat[u(i)] = Category::OverfillStart;
    else cat[u(i)] = Category::OverfillEnd;
  }
  std::vector<mmhar::eval::SegmentScore> out;
  for (int i = 0; i < n; ++i) {
    const Micros stop = i + 1 < n ? grid[u(i + 1)] : end;
    if (!out.empty() && out.back().gt == gt[u(i)] && out.back().pred == pred[u(i)]) {
      out.back().end = stop;
      if (out.back().category != cat[u(i)]) throw std::logic_error("oracle: category varies inside a segment");
    } else {
      out.push_back({grid[u(i)], stop, gt[u(i)], pred[u(i)], cat[u(i)]});
    }
  }
  return out;
}

}  // namespace oracle
