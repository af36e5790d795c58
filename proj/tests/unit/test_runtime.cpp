#include <doctest.h>

#include "mmhar/core/errors.hpp"
#include "mmhar/runtime/runtime.hpp"

using namespace mmhar;
using namespace mmhar::runtime;

namespace {

const ingest::Recording& recording() {
  static const auto rec = [] {
    synth::SynthScript s;
    s.items = {{ActionClass::Tapping, 4.0}, {ActionClass::Rubbing, 4.0}, {ActionClass::Lingering, 3.0}};
    s.gap_s = 1.0;
    s.seed = 12;
    return synth::gen_recording(s);
  }();
  return rec;
}

}  // namespace

TEST_CASE("oracle classifier through the online pipeline") {
  const auto& rec = recording();
  pipeline::PipelineConfig pc;
  OracleClassifier oracle(*rec.labels);
  auto r = run_online(rec, pc, oracle);
  CHECK(r.grid.size() == rec.top.size());
  CHECK(r.windows == rec.top.size() - 89);
  CHECK(r.sync.dropped_no_imu == 0);
  CHECK(r.sync.dropped_no_bottom == 0);
  std::size_t warm = 0;
  for (std::size_t i = 0; i < r.grid.size(); ++i)
    if (r.warmup[i]) {
      ++warm;
      CHECK(r.pred.entries()[i].label == ActionClass::Idle);
    }
  CHECK(warm == 89);
  REQUIRE(r.report.positive);
  REQUIRE(r.report.negative);
  CHECK(r.report.percent(eval::Category::TP) == 100.0);
  CHECK(r.report.percent(eval::Category::TN) == 100.0);
  CHECK(r.report.frames.global == 1.0);
  CHECK(r.gt_scored.size() == r.grid.size() - 89);

  auto all = run_online(rec, pc, oracle, {true});
  CHECK(all.gt_scored.size() == r.grid.size());

  auto bare = rec;
  bare.labels.reset();
  CHECK_THROWS_AS(run_online(bare, pc, oracle), DataError);
}

TEST_CASE("live pipeline over loopback") {
  auto rec = std::make_shared<const ingest::Recording>(recording());
  ingest::StreamServer server({"127.0.0.1", 0}, rec, {0.0, 3});
  pipeline::PipelineConfig pc;
  pc.pairing = pipeline::PairingMode::Causal;
  OracleClassifier oracle(*rec->labels);
  auto st = run_live(server.endpoint(), rec->meta, pc, oracle);
  server.wait();
  CHECK(st.received[0] == rec->imu.size());
  CHECK(st.received[1] == rec->top.size());
  CHECK(st.received[2] == rec->bottom.size());
  CHECK(st.frames == rec->top.size() - st.sync.dropped_no_imu - st.sync.dropped_no_bottom);
  CHECK(st.windows == st.frames - 89);
  CHECK(st.predictions == st.windows);
  CHECK(st.labels.size() == st.predictions);
  CHECK(st.packet_queue_high_water <= 512);
  CHECK(st.window_queue_high_water <= 8);

  auto off = run_online(*rec, pc, oracle);
  std::vector<ActionClass> expect;
  for (std::size_t i = 0; i < off.grid.size(); ++i)
    if (!off.warmup[i]) expect.push_back(off.pred.entries()[i].label);
  CHECK(st.labels == expect);
}

TEST_CASE("synthetic actor and model recognizer") {
  SyntheticActor a(3), b(3);
  for (int k = 0; k < 40; ++k) {
    const double t = k / 30.0;
    const auto c = k < 20 ? ActionClass::Idle : ActionClass::Tapping;
    auto x = a.sample(t, c), y = b.sample(t, c);
    CHECK(*x.top == *y.top);
    CHECK(x.imu == y.imu);
    CHECK(x.timestamp == std::llround(t * 1e6));
  }
  model::FusionConfig mc;
  mc.embed_dim = 8;
  mc.heads = 2;
  mc.feature_dim = 8;
  mc.depth = 1;
  model::FusionNet net(mc);
  auto p = net.init_params();
  pipeline::PipelineConfig pc;
  ModelRecognizer r(net, p, pc, 5);
  r.reset();
  std::vector<ActionClass> out;
  for (std::size_t k = 0; k < 100; ++k)
    out.push_back(r.observe({k, static_cast<Micros>(std::llround(k * 1e6 / 30)), ActionClass::Tapping}));
  for (int k = 0; k < 89; ++k) CHECK(out[static_cast<std::size_t>(k)] == ActionClass::Idle);
  r.reset();
  std::vector<ActionClass> again;
  for (std::size_t k = 0; k < 100; ++k)
    again.push_back(r.observe({k, static_cast<Micros>(std::llround(k * 1e6 / 30)), ActionClass::Tapping}));
  CHECK(again == out);
}
