#include "mmhar/core/label_stream.hpp"

#include <algorithm>
#include <string>

#include "mmhar/core/errors.hpp"

namespace mmhar {

LabelStream::LabelStream(std::vector<LabelEntry> entries, Micros end)
    : entries_(std::move(entries)), end_(end) {
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].timestamp <= entries_[i - 1].timestamp) {
      throw OrderError("label stream: timestamp " + std::to_string(entries_[i].timestamp) +
                           " at position " + std::to_string(i) + " does not follow " +
                           std::to_string(entries_[i - 1].timestamp),
                       i);
    }
  }
  if (!entries_.empty() && end_ <= entries_.back().timestamp) {
    throw OrderError("label stream: end " + std::to_string(end_) + " does not follow last entry",
                     entries_.size());
  }
}

ActionClass LabelStream::label_at(Micros t) const {
  auto it = std::upper_bound(entries_.begin(), entries_.end(), t,
                             [](Micros v, const LabelEntry& e) { return v < e.timestamp; });
  if (it == entries_.begin()) return ActionClass::Idle;
  return std::prev(it)->label;
}

LabelStream LabelStream::rasterize(std::span<const Micros> grid, Micros end) const {
  std::vector<LabelEntry> out;
  out.reserve(grid.size());
  for (Micros t : grid) out.push_back({t, label_at(t)});
  return LabelStream(std::move(out), end);
}

std::vector<Event> extract_events(const LabelStream& stream) {
  std::vector<Event> events;
  const auto& e = stream.entries();
  std::size_t i = 0;
  while (i < e.size()) {
    std::size_t j = i + 1;
    while (j < e.size() && e[j].label == e[i].label) ++j;
    if (e[i].label != ActionClass::Idle) {
      Micros stop = j < e.size() ? e[j].timestamp : stream.end();
      events.push_back({e[i].label, e[i].timestamp, stop});
    }
    i = j;
  }
  return events;
}

LabelStream rasterize_events(std::span<const Event> events, std::span<const Micros> grid, Micros end) {
  std::vector<LabelEntry> out;
  out.reserve(grid.size());
  std::size_t k = 0;
  for (Micros t : grid) {
    while (k < events.size() && events[k].end <= t) ++k;
    ActionClass label = ActionClass::Idle;
    if (k < events.size() && events[k].start <= t && t < events[k].end) label = events[k].label;
    out.push_back({t, label});
  }
  return LabelStream(std::move(out), end);
}

}  // namespace mmhar
