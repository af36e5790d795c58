#include "mmhar/eval/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mmhar/core/errors.hpp"

namespace mmhar::eval {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::TP: return "tp";
    case Category::TN: return "tn";
    case Category::Insertion: return "insertion";
    case Category::Deletion: return "deletion";
    case Category::Merge: return "merge";
    case Category::Fragmentation: return "fragmentation";
    case Category::OverfillStart: return "overfill_start";
    case Category::OverfillEnd: return "overfill_end";
    case Category::UnderfillStart: return "underfill_start";
    case Category::UnderfillEnd: return "underfill_end";
  }
  return "?";
}

bool positive_side(Category c) {
  return c == Category::TP || c == Category::Deletion || c == Category::Fragmentation ||
         c == Category::UnderfillStart || c == Category::UnderfillEnd;
}

void check_same_grid(const LabelStream& gt, const LabelStream& pred) {
  const auto& a = gt.entries();
  const auto& b = pred.entries();
  bool same = a.size() == b.size() && gt.end() == pred.end();
  for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].timestamp == b[i].timestamp;
  if (same) return;
  std::set<Micros> ta, tb;
  for (const auto& e : a) ta.insert(e.timestamp);
  for (const auto& e : b) tb.insert(e.timestamp);
  std::ostringstream msg;
  msg << "evaluation grid mismatch";
  auto list = [&](const char* what, const std::set<Micros>& have, const std::set<Micros>& want) {
    std::vector<Micros> miss;
    std::set_difference(want.begin(), want.end(), have.begin(), have.end(), std::back_inserter(miss));
    if (miss.empty()) return;
    msg << "; missing from " << what << ":";
    for (std::size_t i = 0; i < miss.size() && i < 20; ++i) msg << ' ' << miss[i];
    if (miss.size() > 20) msg << " ... (" << miss.size() << " total)";
  };
  list("prediction", tb, ta);
  list("ground truth", ta, tb);
  if (gt.end() != pred.end()) msg << "; end " << gt.end() << " vs " << pred.end();
  throw DataError(msg.str());
}

FrameAccuracy frame_accuracy(const LabelStream& gt, const LabelStream& pred) {
  check_same_grid(gt, pred);
  FrameAccuracy r;
  std::array<std::size_t, kNumClasses> hits{};
  std::size_t total_hits = 0;
  const auto& a = gt.entries();
  const auto& b = pred.entries();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto c = static_cast<std::size_t>(class_index(a[i].label));
    ++r.class_frames[c];
    if (a[i].label == b[i].label) {
      ++hits[c];
      ++total_hits;
    }
  }
  r.frames = a.size();
  r.global = a.empty() ? 0.0 : static_cast<double>(total_hits) / static_cast<double>(a.size());
  for (std::size_t c = 0; c < kNumClasses; ++c)
    if (r.class_frames[c] > 0) r.per_class[c] = static_cast<double>(hits[c]) / static_cast<double>(r.class_frames[c]);
  return r;
}

std::vector<SegmentScore> score_segments(const LabelStream& gt, const LabelStream& pred) {
  check_same_grid(gt, pred);
  const auto& a = gt.entries();
  const auto& b = pred.entries();
  std::vector<SegmentScore> segs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Micros end = gt.interval_end(i);
    if (!segs.empty() && segs.back().gt == a[i].label && segs.back().pred == b[i].label) segs.back().end = end;
    else segs.push_back({a[i].timestamp, end, a[i].label, b[i].label, Category::TN});
  }
  const std::size_t n = segs.size();
  const auto idle = ActionClass::Idle;

  // gt events: maximal constant non-Idle gt runs, as segment index ranges.
  std::vector<int> gt_event(n, -1);
  std::vector<std::pair<std::size_t, std::size_t>> events;
  for (std::size_t i = 0; i < n; ++i) {
    if (segs[i].gt == idle) continue;
    if (i > 0 && gt_event[i - 1] >= 0 && segs[i - 1].gt == segs[i].gt) {
      gt_event[i] = gt_event[i - 1];
      events.back().second = i + 1;
    } else {
      gt_event[i] = static_cast<int>(events.size());
      events.push_back({i, i + 1});
    }
  }
  std::vector<char> tp(n, 0);
  for (std::size_t i = 0; i < n; ++i) tp[i] = segs[i].gt != idle && segs[i].gt == segs[i].pred;

  // Positive side.
  for (const auto& [lo, hi] : events) {
    std::ptrdiff_t first = -1, last = -1;
    for (std::size_t i = lo; i < hi; ++i)
      if (tp[i]) {
        if (first < 0) first = static_cast<std::ptrdiff_t>(i);
        last = static_cast<std::ptrdiff_t>(i);
      }
    for (std::size_t i = lo; i < hi; ++i) {
      const auto si = static_cast<std::ptrdiff_t>(i);
      if (tp[i]) segs[i].category = Category::TP;
      else if (first < 0) segs[i].category = Category::Deletion;
      else if (si < first) segs[i].category = Category::UnderfillStart;
      else if (si > last) segs[i].category = Category::UnderfillEnd;
      else segs[i].category = Category::Fragmentation;
    }
  }

  // Negative side, per predicted event (maximal non-Idle prediction run).
  std::size_t i = 0;
  while (i < n) {
    if (segs[i].pred == idle) {
      if (segs[i].gt == idle) segs[i].category = Category::TN;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && segs[j].pred != idle) ++j;
    std::set<int> tp_events;
    std::vector<int> touched;
    for (std::size_t k = i; k < j; ++k) {
      if (gt_event[k] < 0) continue;
      if (tp[k]) tp_events.insert(gt_event[k]);
      if (touched.empty() || touched.back() != gt_event[k]) touched.push_back(gt_event[k]);
    }
    for (std::size_t k = i; k < j; ++k) {
      if (segs[k].gt != idle) continue;
      if (tp_events.empty()) {
        segs[k].category = Category::Insertion;
        continue;
      }
      bool before = false, after = false;
      for (int e : touched) {
        if (events[static_cast<std::size_t>(e)].second <= k) before = true;
        if (events[static_cast<std::size_t>(e)].first > k) after = true;
      }
      if (before && after) segs[k].category = Category::Merge;
      else if (after) segs[k].category = Category::OverfillStart;
      else segs[k].category = Category::OverfillEnd;
    }
    i = j;
  }
  return segs;
}

double EventReport::percent(Category c) const {
  const auto& side = positive_side(c) ? positive : negative;
  const auto& order = positive_side(c) ? kPositiveOrder : kNegativeOrder;
  if (!side) return 0.0;
  for (std::size_t k = 0; k < order.size(); ++k)
    if (order[k] == c) return (*side)[k];
  return 0.0;
}

EventReport summarize(std::span<const SegmentScore> scores, const LabelStream& gt, const LabelStream& pred) {
  EventReport r;
  r.frames = frame_accuracy(gt, pred);
  std::array<double, kNumCategories> dur{};
  double pos = 0.0, neg = 0.0;
  for (const auto& s : scores) {
    const double d = static_cast<double>(s.duration());
    dur[static_cast<std::size_t>(s.category)] += d;
    (s.gt == ActionClass::Idle ? neg : pos) += d;
  }
  auto fill = [&](const std::array<Category, 5>& order, double denom) {
    std::array<double, 5> out{};
    for (std::size_t k = 0; k < 5; ++k) out[k] = 100.0 * dur[static_cast<std::size_t>(order[k])] / denom;
    return out;
  };
  if (pos > 0.0) r.positive = fill(kPositiveOrder, pos);
  if (neg > 0.0) r.negative = fill(kNegativeOrder, neg);
  return r;
}

namespace {

constexpr std::array<const char*, 5> kPositiveHeader = {"True Pos. (%)", "Underfill Start", "Underfill End",
                                                        "Fragmentation", "Deletion"};
constexpr std::array<const char*, 5> kNegativeHeader = {"True Neg. (%)", "Overfill Start", "Overfill End",
                                                        "Insertion", "Merge"};

std::string fmt(const std::optional<std::array<double, 5>>& side, std::size_t k) {
  if (!side) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << (*side)[k];
  return s.str();
}

}  // namespace

void write_report_csv(std::ostream& out, std::span<const NamedReport> rows) {
  out << "Model";
  for (const char* h : kPositiveHeader) out << ',' << h;
  for (const char* h : kNegativeHeader) out << ',' << h;
  out << '\n';
  for (const auto& r : rows) {
    out << r.model;
    for (std::size_t k = 0; k < 5; ++k) out << ',' << fmt(r.report.positive, k);
    for (std::size_t k = 0; k < 5; ++k) out << ',' << fmt(r.report.negative, k);
    out << '\n';
  }
}

void write_report_text(std::ostream& out, std::span<const NamedReport> rows) {
  std::size_t name_w = 5;
  for (const auto& r : rows) name_w = std::max(name_w, r.model.size());
  auto block = [&](const std::array<const char*, 5>& header, bool positive) {
    out << std::left << std::setw(static_cast<int>(name_w)) << "Model";
    for (const char* h : header) out << "  " << std::right << std::setw(15) << h;
    out << '\n';
    for (const auto& r : rows) {
      out << std::left << std::setw(static_cast<int>(name_w)) << r.model;
      for (std::size_t k = 0; k < 5; ++k)
        out << "  " << std::right << std::setw(15) << fmt(positive ? r.report.positive : r.report.negative, k);
      out << '\n';
    }
  };
  block(kPositiveHeader, true);
  out << '\n';
  block(kNegativeHeader, false);
}

void write_frame_accuracy_csv(std::ostream& out, const FrameAccuracy& acc) {
  out << "class,frames,accuracy\n" << std::setprecision(6);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    out << to_string(class_from_index(static_cast<int>(c))) << ',' << acc.class_frames[c] << ',';
    if (acc.per_class[c]) out << *acc.per_class[c];
    out << '\n';
  }
  out << "global," << acc.frames << ',' << acc.global << '\n';
}

void write_segments_jsonl(std::ostream& out, std::span<const SegmentScore> scores) {
  for (const auto& s : scores) {
    nlohmann::json j = {{"start", s.start},
                        {"end", s.end},
                        {"gt", std::string(to_string(s.gt))},
                        {"pred", std::string(to_string(s.pred))},
                        {"category", std::string(to_string(s.category))}};
    out << j.dump() << '\n';
  }
}

void Confusion::add(ActionClass truth, ActionClass predicted) {
  ++counts[static_cast<std::size_t>(class_index(truth))][static_cast<std::size_t>(class_index(predicted))];
}

std::size_t Confusion::total() const {
  std::size_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

double Confusion::accuracy() const {
  const std::size_t t = total();
  if (t == 0) return 0.0;
  std::size_t d = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) d += counts[c][c];
  return static_cast<double>(d) / static_cast<double>(t);
}

std::array<std::optional<double>, kNumClasses> Confusion::f1() const {
  std::array<std::optional<double>, kNumClasses> out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t tp = counts[c][c], truth = 0, predicted = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      truth += counts[c][k];
      predicted += counts[k][c];
    }
    if (truth == 0 && predicted == 0) continue;
    out[c] = 2.0 * static_cast<double>(tp) / static_cast<double>(truth + predicted);
  }
  return out;
}

double Confusion::macro_f1() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& f : f1())
    if (f) {
      sum += *f;
      ++n;
    }
  return n ? sum / n : 0.0;
}

void write_confusion_csv(std::ostream& out, const Confusion& c) {
  out << "truth\\predicted";
  for (auto a : kAllActions) out << ',' << to_string(a);
  out << '\n';
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    out << to_string(class_from_index(static_cast<int>(t)));
    for (std::size_t p = 0; p < kNumClasses; ++p) out << ',' << c.counts[t][p];
    out << '\n';
  }
}

}  // namespace mmhar::eval
