#include <doctest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "mmhar/core/errors.hpp"
#include "mmhar/eval/metrics.hpp"

using namespace mmhar;
using namespace mmhar::eval;

namespace {

constexpr auto I = ActionClass::Idle;
constexpr auto A = ActionClass::Tapping;
constexpr auto B = ActionClass::Rubbing;

LabelStream stream(std::initializer_list<std::pair<Micros, ActionClass>> runs, Micros end) {
  std::vector<LabelEntry> e;
  for (auto [t, c] : runs) e.push_back({t, c});
  return LabelStream(std::move(e), end);
}

std::vector<Micros> unit_grid(int n) {
  std::vector<Micros> g(static_cast<std::size_t>(n));
  std::iota(g.begin(), g.end(), Micros{0});
  return g;
}

std::vector<SegmentScore> score(const LabelStream& gt, const LabelStream& pred, int n) {
  auto g = unit_grid(n);
  return score_segments(gt.rasterize(g, n), pred.rasterize(g, n));
}

std::vector<SegmentScore> non_tn(const std::vector<SegmentScore>& s) {
  std::vector<SegmentScore> out;
  for (const auto& x : s)
    if (x.category != Category::TN) out.push_back(x);
  return out;
}

LabelStream from_frames(const std::vector<ActionClass>& v, const std::vector<Micros>& g, Micros end) {
  std::vector<LabelEntry> e;
  for (std::size_t i = 0; i < v.size(); ++i) e.push_back({g[i], v[i]});
  return LabelStream(std::move(e), end);
}

}  // namespace

TEST_CASE("underfill at start, overfill at end") {
  auto s = non_tn(score(stream({{0, I}, {10, A}, {30, I}}, 50), stream({{0, I}, {12, A}, {35, I}}, 50), 50));
  REQUIRE(s.size() == 3);
  CHECK(s[0] == SegmentScore{10, 12, A, I, Category::UnderfillStart});
  CHECK(s[1] == SegmentScore{12, 30, A, A, Category::TP});
  CHECK(s[2] == SegmentScore{30, 35, I, A, Category::OverfillEnd});
}

TEST_CASE("fragmentation and perfect prediction") {
  auto gt = stream({{0, I}, {10, A}, {30, I}}, 40);
  auto s = non_tn(score(gt, stream({{0, I}, {10, A}, {18, I}, {22, A}, {30, I}}, 40), 40));
  REQUIRE(s.size() == 3);
  CHECK(s[0] == SegmentScore{10, 18, A, A, Category::TP});
  CHECK(s[1] == SegmentScore{18, 22, A, I, Category::Fragmentation});
  CHECK(s[2] == SegmentScore{22, 30, A, A, Category::TP});
  for (const auto& x : score(gt, gt, 40)) CHECK((x.category == Category::TP || x.category == Category::TN));
}

TEST_CASE("merge across two events") {
  auto gt = stream({{0, I}, {10, A}, {20, I}, {25, B}, {35, I}}, 40);
  auto pred = stream({{0, I}, {10, A}, {35, I}}, 40);
  auto s = non_tn(score(gt, pred, 40));
  REQUIRE(s.size() == 3);
  CHECK(s[0] == SegmentScore{10, 20, A, A, Category::TP});
  CHECK(s[1] == SegmentScore{20, 25, I, A, Category::Merge});
  CHECK(s[2] == SegmentScore{25, 35, B, A, Category::Deletion});
}

TEST_CASE("insertion, deletion and overfill start") {
  auto gt = stream({{0, I}, {10, A}, {20, I}}, 40);
  auto s = non_tn(score(gt, stream({{0, I}, {5, A}, {20, I}, {30, B}, {33, I}}, 40), 40));
  REQUIRE(s.size() == 3);
  CHECK(s[0].category == Category::OverfillStart);
  CHECK(s[1].category == Category::TP);
  CHECK(s[2] == SegmentScore{30, 33, I, B, Category::Insertion});
  auto d = non_tn(score(gt, stream({{0, I}}, 40), 40));
  REQUIRE(d.size() == 1);
  CHECK(d[0] == SegmentScore{10, 20, A, I, Category::Deletion});
}

TEST_CASE("random streams agree with the brute-force oracle") {
  std::mt19937_64 rng(11);
  const ActionClass classes[] = {I, A, B, ActionClass::Patting};
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 40);
    const int k = 1 + static_cast<int>(rng() % 4);
    std::vector<Micros> g;
    Micros t = 0;
    for (int i = 0; i < n; ++i) {
      g.push_back(t);
      t += 1 + static_cast<Micros>(rng() % 50);
    }
    const Micros end = t;
    auto draw = [&](std::vector<ActionClass>& v) {
      v.resize(static_cast<std::size_t>(n));
      ActionClass cur = classes[rng() % static_cast<unsigned>(k)];
      for (auto& x : v) {
        if (rng() % 4 == 0) cur = classes[rng() % static_cast<unsigned>(k)];
        x = cur;
      }
    };
    std::vector<ActionClass> gv, pv;
    draw(gv);
    draw(pv);
    auto gt = from_frames(gv, g, end).rasterize(g, end);
    auto pred = from_frames(pv, g, end).rasterize(g, end);
    auto got = score_segments(gt, pred);
    auto want = oracle::score_frames(gv, pv, g, end);
    REQUIRE(got == want);
    Micros cursor = g.front();
    for (const auto& s : got) {
      CHECK(s.start == cursor);
      CHECK(s.end > s.start);
      CHECK(positive_side(s.category) == (s.gt != I));
      cursor = s.end;
    }
    CHECK(cursor == end);
    auto r = summarize(got, gt, pred);
    for (const auto& side : {r.positive, r.negative})
      if (side) CHECK(std::abs(std::accumulate(side->begin(), side->end(), 0.0) - 100.0) <= 0.01);
    // Frame accuracy equals the duration share of TP + TN on a uniform grid.
    if (g.size() > 1) {
      std::vector<Micros> ug = unit_grid(n);
      auto ugt = from_frames(gv, ug, n), upr = from_frames(pv, ug, n);
      auto us = score_segments(ugt.rasterize(ug, n), upr.rasterize(ug, n));
      double agree = 0;
      for (const auto& s : us)
        if (s.category == Category::TP || s.category == Category::TN) agree += static_cast<double>(s.duration());
      CHECK(frame_accuracy(ugt.rasterize(ug, n), upr.rasterize(ug, n)).global == doctest::Approx(agree / n));
    }
  }
}

TEST_CASE("summaries") {
  auto g = unit_grid(100);
  auto gt = stream({{0, I}, {20, A}, {60, I}, {70, B}, {80, I}}, 100).rasterize(g, 100);
  auto r = summarize(score_segments(gt, gt), gt, gt);
  CHECK(r.percent(Category::TP) == 100.0);
  CHECK(r.percent(Category::TN) == 100.0);
  CHECK(r.percent(Category::Deletion) == 0.0);
  // B fully missed: 10 of 50 positive frames.
  auto pred = stream({{0, I}, {20, A}, {60, I}}, 100).rasterize(g, 100);
  r = summarize(score_segments(gt, pred), gt, pred);
  CHECK(r.percent(Category::Deletion) == doctest::Approx(20.0));
  // Exactly 10% of positive duration deleted: Pushing [70, 75) of 50 frames.
  auto gt2 = stream({{0, I}, {20, A}, {60, I}, {65, B}, {70, ActionClass::Pushing}, {75, I}}, 100).rasterize(g, 100);
  auto pred2 = stream({{0, I}, {20, A}, {60, I}, {65, B}, {70, I}}, 100).rasterize(g, 100);
  r = summarize(score_segments(gt2, pred2), gt2, pred2);
  CHECK(r.percent(Category::Deletion) == doctest::Approx(10.0));
  auto idle = stream({{0, I}}, 100).rasterize(g, 100);
  r = summarize(score_segments(idle, idle), idle, idle);
  CHECK_FALSE(r.positive.has_value());
  CHECK(r.negative.has_value());
}

TEST_CASE("frame accuracy") {
  auto g = unit_grid(100);
  auto gt = stream({{0, I}, {40, A}, {70, B}}, 100).rasterize(g, 100);
  auto idle = stream({{0, I}}, 100).rasterize(g, 100);
  auto f = frame_accuracy(gt, idle);
  CHECK(f.global == doctest::Approx(0.40));
  CHECK(*f.per_class[class_index(I)] == 1.0);
  CHECK(*f.per_class[class_index(A)] == 0.0);
  CHECK(*f.per_class[class_index(B)] == 0.0);
  CHECK_FALSE(f.per_class[class_index(ActionClass::Patting)].has_value());
  auto one = stream({{0, I}, {40, A}, {41, I}}, 100).rasterize(g, 100);
  CHECK(frame_accuracy(idle, one).global == doctest::Approx(0.99));
  CHECK(frame_accuracy(gt, gt).global == 1.0);

  auto shifted = stream({{0, I}}, 100).rasterize(std::vector<Micros>{0, 1, 3}, 100);
  try {
    frame_accuracy(stream({{0, I}}, 100).rasterize(std::vector<Micros>{0, 1, 2}, 100), shifted);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string m = e.what();
    CHECK(m.find('2') != std::string::npos);
    CHECK(m.find('3') != std::string::npos);
  }
}

TEST_CASE("confusion and macro F1 on a toy matrix") {
  Confusion c;
  auto add = [&](ActionClass t, ActionClass p, int n) {
    for (int i = 0; i < n; ++i) c.add(t, p);
  };
  add(I, I, 5);
  add(I, A, 1);
  add(A, A, 3);
  add(A, B, 1);
  add(B, B, 2);
  add(B, I, 2);
  CHECK(c.total() == 14);
  CHECK(c.accuracy() == doctest::Approx(10.0 / 14));
  // F1 = 2TP / (2TP + FP + FN).
  const double fi = 10.0 / (10 + 2 + 1), fa = 6.0 / (6 + 1 + 1), fb = 4.0 / (4 + 1 + 2);
  auto f = c.f1();
  CHECK(*f[class_index(I)] == doctest::Approx(fi));
  CHECK(*f[class_index(A)] == doctest::Approx(fa));
  CHECK(*f[class_index(B)] == doctest::Approx(fb));
  CHECK_FALSE(f[class_index(ActionClass::Pinching)].has_value());
  CHECK(c.macro_f1() == doctest::Approx((fi + fa + fb) / 3));
  std::ostringstream os;
  write_confusion_csv(os, c);
  CHECK(os.str().rfind("truth", 0) == 0);
}

TEST_CASE("report layout") {
  auto g = unit_grid(50);
  auto gt = stream({{0, I}, {10, A}, {30, I}}, 50).rasterize(g, 50);
  auto pred = stream({{0, I}, {12, A}, {35, I}}, 50).rasterize(g, 50);
  auto s = score_segments(gt, pred);
  std::vector<NamedReport> rows{{"Multimodal", summarize(s, gt, pred)}};
  std::ostringstream csv;
  write_report_csv(csv, rows);
  const auto header = csv.str().substr(0, csv.str().find('\n'));
  for (const char* col : {"True Pos. (%)", "Underfill Start", "Underfill End", "Fragmentation", "Deletion",
                          "True Neg. (%)", "Overfill Start", "Overfill End", "Insertion", "Merge"})
    CHECK(header.find(col) != std::string::npos);
  CHECK(csv.str().find("Multimodal") != std::string::npos);
  std::ostringstream js;
  write_segments_jsonl(js, s);
  const std::string text = js.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(s.size()));
  CHECK(text.find("\"underfill_start\"") != std::string::npos);
}
