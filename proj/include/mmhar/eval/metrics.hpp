#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmhar/core/label_stream.hpp"

namespace mmhar::eval {

enum class Category : std::uint8_t {
  TP,
  TN,
  Insertion,
  Deletion,
  Merge,
  Fragmentation,
  OverfillStart,
  OverfillEnd,
  UnderfillStart,
  UnderfillEnd,
};

inline constexpr std::size_t kNumCategories = 10;
std::string_view to_string(Category c);
// True for categories that can only occur where ground truth is non-Idle.
bool positive_side(Category c);

struct SegmentScore {
  Micros start = 0;
  Micros end = 0;
  ActionClass gt = ActionClass::Idle;
  ActionClass pred = ActionClass::Idle;
  Category category = Category::TN;
  Micros duration() const { return end - start; }
  friend bool operator==(const SegmentScore&, const SegmentScore&) = default;
};

struct FrameAccuracy {
  double global = 0.0;
  std::size_t frames = 0;
  std::array<std::optional<double>, kNumClasses> per_class;  // absent when the class has no gt frames
  std::array<std::size_t, kNumClasses> class_frames{};
};

// Both streams must carry one entry per grid timestamp (LabelStream::rasterize)
// on identical grids. Throws DataError listing the timestamps missing from
// either side otherwise.
void check_same_grid(const LabelStream& gt, const LabelStream& pred);

FrameAccuracy frame_accuracy(const LabelStream& gt, const LabelStream& pred);

// Cuts the timeline at every boundary of either stream and assigns each
// maximal constant-(gt, pred) segment an event category. Idle is the NULL
// class; a predicted event is a maximal run of non-Idle predictions.
std::vector<SegmentScore> score_segments(const LabelStream& gt, const LabelStream& pred);

struct EventReport {
  // Percentages of non-Idle gt duration: TP, UnderfillStart, UnderfillEnd,
  // Fragmentation, Deletion. Absent when there is no such duration.
  std::optional<std::array<double, 5>> positive;
  // Percentages of Idle gt duration: TN, OverfillStart, OverfillEnd,
  // Insertion, Merge.
  std::optional<std::array<double, 5>> negative;
  FrameAccuracy frames;
  double percent(Category c) const;
};

EventReport summarize(std::span<const SegmentScore> scores, const LabelStream& gt, const LabelStream& pred);

inline constexpr std::array<Category, 5> kPositiveOrder = {Category::TP, Category::UnderfillStart,
                                                           Category::UnderfillEnd, Category::Fragmentation,
                                                           Category::Deletion};
inline constexpr std::array<Category, 5> kNegativeOrder = {Category::TN, Category::OverfillStart,
                                                           Category::OverfillEnd, Category::Insertion,
                                                           Category::Merge};

struct NamedReport {
  std::string model;
  EventReport report;
};

// Event table: header row then one row per model. Absent sides print "-".
void write_report_csv(std::ostream& out, std::span<const NamedReport> rows);
void write_report_text(std::ostream& out, std::span<const NamedReport> rows);
// Per-class frame accuracy table (class,frames,accuracy).
void write_frame_accuracy_csv(std::ostream& out, const FrameAccuracy& acc);
// One JSON object per line: start, end, gt, pred, category.
void write_segments_jsonl(std::ostream& out, std::span<const SegmentScore> scores);

// Window-level offline metrics.
struct Confusion {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};  // [truth][predicted]
  void add(ActionClass truth, ActionClass predicted);
  std::size_t total() const;
  double accuracy() const;
  // Per-class F1; classes absent from both truth and prediction are skipped in
  // the macro mean.
  std::array<std::optional<double>, kNumClasses> f1() const;
  double macro_f1() const;
};

void write_confusion_csv(std::ostream& out, const Confusion& c);

}  // namespace mmhar::eval
