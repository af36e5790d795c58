#pragma once

#include <span>
#include <vector>

#include "mmhar/core/action.hpp"
#include "mmhar/core/types.hpp"

namespace mmhar {

struct LabelEntry {
  Micros timestamp = 0;
  ActionClass label = ActionClass::Idle;
  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

// Piecewise-constant label function: each entry holds from its timestamp until
// the next entry, the last one until `end`.
class LabelStream {
 public:
  LabelStream() = default;
  // Throws OrderError when timestamps are not strictly increasing or
  // `end` does not follow the last entry.
  LabelStream(std::vector<LabelEntry> entries, Micros end);

  const std::vector<LabelEntry>& entries() const { return entries_; }
  Micros end() const { return end_; }
  Micros start() const { return entries_.empty() ? end_ : entries_.front().timestamp; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  ActionClass label_at(Micros t) const;
  Micros interval_end(std::size_t i) const {
    return i + 1 < entries_.size() ? entries_[i + 1].timestamp : end_;
  }

  // Samples this stream on the given grid. The result ends at `end`.
  LabelStream rasterize(std::span<const Micros> grid, Micros end) const;

  friend bool operator==(const LabelStream&, const LabelStream&) = default;

 private:
  std::vector<LabelEntry> entries_;
  Micros end_ = 0;
};

struct Event {
  ActionClass label = ActionClass::Pinching;
  Micros start = 0;
  Micros end = 0;
  friend bool operator==(const Event&, const Event&) = default;
};

// Maximal constant-label non-Idle runs, in temporal order.
std::vector<Event> extract_events(const LabelStream& stream);

// Inverse of extract_events on a known grid: Idle everywhere except inside events.
LabelStream rasterize_events(std::span<const Event> events, std::span<const Micros> grid, Micros end);

}  // namespace mmhar
