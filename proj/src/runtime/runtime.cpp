#include "mmhar/runtime/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <thread>
#include <variant>

#include "mmhar/core/bounded_queue.hpp"
#include "mmhar/core/errors.hpp"
#include "mmhar/pipeline/sync.hpp"

namespace mmhar::runtime {

using Clock = std::chrono::steady_clock;

ActionClass ModelClassifier::classify(const pipeline::Window& w) const {
  return net_.predict_window(w, params_, mask_).label;
}

OnlineResult run_online(const ingest::Recording& rec, const pipeline::PipelineConfig& config,
                        const WindowClassifier& classifier, const OnlineOptions& options) {
  if (!rec.labels) throw DataError("online: recording has no ground truth");
  if (rec.top.empty()) throw DataError("online: recording has no frames");
  config.validate();
  OnlineResult r;
  for (const auto& f : rec.top) r.grid.push_back(f.timestamp);

  const auto aligned = pipeline::synchronize(rec.imu, rec.top, rec.bottom, pipeline::SyncOptions::from(config), &r.sync);
  pipeline::SampleBuilder builder(rec.meta.geometry, rec.meta.source_width, rec.meta.source_height, config);
  pipeline::WindowBuffer buffer(config);
  std::vector<pipeline::Window> windows;
  std::vector<std::size_t> frame_of;
  std::size_t g = 0;
  for (const auto& a : aligned) {
    while (g < r.grid.size() && r.grid[g] != a.timestamp) ++g;
    if (g == r.grid.size()) throw DataError("online: aligned sample not on the Top-camera grid");
    auto s = std::make_shared<const pipeline::SyncedSample>(builder.build(a));
    if (auto w = buffer.push(std::move(s))) {
      windows.push_back(std::move(*w));
      frame_of.push_back(g);
    }
  }
  r.windows = windows.size();

  std::vector<ActionClass> labels(windows.size(), ActionClass::Idle);
  std::vector<std::exception_ptr> errors(windows.size());
  const bool par = classifier.reentrant();
#pragma omp parallel for schedule(dynamic, 4) if (par)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(windows.size()); ++i) {
    try {
      labels[static_cast<std::size_t>(i)] = classifier.classify(windows[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<LabelEntry> pred, gt;
  const std::size_t first = frame_of.empty() ? r.grid.size() : frame_of.front();
  ActionClass current = ActionClass::Idle;
  std::size_t w = 0;
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    while (w < frame_of.size() && frame_of[w] == i) current = labels[w++];
    r.warmup.push_back(i < first);
    pred.push_back({r.grid[i], current});
    gt.push_back({r.grid[i], rec.labels->label_at(r.grid[i])});
  }
  const Micros end = rec.labels->end();
  r.gt = LabelStream(gt, end);
  r.pred = LabelStream(pred, end);
  if (options.include_warmup) {
    r.gt_scored = r.gt;
    r.pred_scored = r.pred;
  } else {
    r.gt_scored = LabelStream({gt.begin() + static_cast<std::ptrdiff_t>(first), gt.end()}, end);
    r.pred_scored = LabelStream({pred.begin() + static_cast<std::ptrdiff_t>(first), pred.end()}, end);
  }
  r.segments = eval::score_segments(r.gt_scored, r.pred_scored);
  r.report = eval::summarize(r.segments, r.gt_scored, r.pred_scored);
  return r;
}

namespace {

struct Arrival {
  ingest::StreamId stream;
  std::optional<ingest::Packet> packet;  // nullopt: stream finished
};

struct Ready {
  pipeline::Window window;
  Clock::time_point at;
};

}  // namespace

LiveStats run_live(const ingest::Endpoint& endpoint, const ingest::RecordingMeta& meta,
                   const pipeline::PipelineConfig& config, const WindowClassifier& classifier,
                   const LiveOptions& options) {
  config.validate();
  LiveStats st;
  BoundedQueue<Arrival> packets(options.packet_queue);
  BoundedQueue<Ready> ready(options.window_queue);
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto fail = [&](std::exception_ptr e) {
    {
      std::lock_guard lock(err_mu);
      if (!first_error) first_error = e;
    }
    packets.close();
    ready.close();
  };

  std::vector<ingest::StreamClient> clients;
  for (auto s : ingest::kAllStreams) clients.push_back(ingest::StreamClient::connect(endpoint, s));

  const auto t_start = Clock::now();
  std::vector<std::jthread> receivers;
  for (auto& c : clients) {
    receivers.emplace_back([&packets, &fail, &c] {
      try {
        while (auto p = c.next())
          if (!packets.push({c.stream(), std::move(*p)})) return;
        packets.push({c.stream(), std::nullopt});
      } catch (...) {
        fail(std::current_exception());
      }
    });
  }

  std::optional<Clock::time_point> first_pred, last_pred;
  std::jthread inference([&] {
    try {
      while (auto r = ready.pop()) {
        const ActionClass label = classifier.classify(r->window);
        const auto now = Clock::now();
        st.labels.push_back(label);
        ++st.predictions;
        st.max_lag_s = std::max(st.max_lag_s, std::chrono::duration<double>(now - r->at).count());
        if (!first_pred) first_pred = now;
        last_pred = now;
      }
    } catch (...) {
      fail(std::current_exception());
    }
  });

  try {
    pipeline::Synchronizer sync(pipeline::SyncOptions::from(config));
    pipeline::SampleBuilder builder(meta.geometry, meta.source_width, meta.source_height, config);
    pipeline::WindowBuffer buffer(config);
    std::optional<Micros> first_ts;
    Micros last_ts = 0;
    int finished = 0;
    while (finished < 3) {
      auto a = packets.pop();
      if (!a) break;
      const auto si = static_cast<std::size_t>(a->stream);
      if (!a->packet) {
        ++finished;
        if (a->stream == ingest::StreamId::Imu) sync.finish_imu();
        else if (a->stream == ingest::StreamId::Top) sync.finish_top();
        else sync.finish_bottom();
      } else {
        ++st.received[si];
        if (auto* imu = std::get_if<ImuSample>(&*a->packet)) {
          sync.push_imu(*imu);
        } else {
          auto f = std::make_shared<const TactileFrame>(std::get<TactileFrame>(std::move(*a->packet)));
          if (a->stream == ingest::StreamId::Top) sync.push_top(std::move(f));
          else sync.push_bottom(std::move(f));
        }
      }
      for (auto& al : sync.poll()) {
        auto s = std::make_shared<const pipeline::SyncedSample>(builder.build(al));
        if (!first_ts) first_ts = s->timestamp;
        last_ts = s->timestamp;
        ++st.frames;
        if (auto w = buffer.push(std::move(s))) {
          ++st.windows;
          if (!ready.push({std::move(*w), Clock::now()})) break;
        }
      }
    }
    st.sync = sync.counters();
    if (first_ts) st.stream_seconds = static_cast<double>(last_ts - *first_ts) / 1e6;
  } catch (...) {
    fail(std::current_exception());
  }
  ready.close();
  inference.join();
  packets.close();
  receivers.clear();
  if (first_error) std::rethrow_exception(first_error);

  st.wall_seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
  if (first_pred && last_pred && st.predictions > 1)
    st.prediction_fps = static_cast<double>(st.predictions - 1) /
                        std::max(1e-9, std::chrono::duration<double>(*last_pred - *first_pred).count());
  st.packet_queue_high_water = packets.high_water_mark();
  st.window_queue_high_water = ready.high_water_mark();
  return st;
}

SyntheticActor::SyntheticActor(std::uint64_t seed, const SensorGeometry& geometry, const synth::RenderOptions& render,
                               double style_spread)
    : rng_(seed), geometry_(geometry), render_(render) {
  style_ = synth::SubjectStyle::draw(rng_, style_spread, Hand::Right);
  idle_top_ = std::make_shared<const TactileFrame>(synth::render_frame({}, geometry_, CameraId::Top, render_, 0));
  idle_bottom_ = std::make_shared<const TactileFrame>(synth::render_frame({}, geometry_, CameraId::Bottom, render_, 0));
}

void SyntheticActor::begin(ActionClass c, double t) {
  constexpr double kSpan = 120.0;
  current_ = c;
  since_ = t;
  started_ = true;
  contact_ = synth::make_contact_profile(c, kSpan, rng_, style_);
  imu_ = synth::make_imu_profile(c, kSpan, rng_, style_);
}

pipeline::AlignedSample SyntheticActor::sample(double t, ActionClass c) {
  if (!started_ || c != current_ || t - since_ >= contact_.duration_s) begin(c, t);
  const double local = t - since_;
  const Micros ts = static_cast<Micros>(std::llround(t * 1e6));
  pipeline::AlignedSample a;
  a.timestamp = ts;
  const auto& contacts = contact_.at(local);
  if (contacts.empty()) {
    auto top = std::make_shared<TactileFrame>(*idle_top_);
    auto bottom = std::make_shared<TactileFrame>(*idle_bottom_);
    top->timestamp = bottom->timestamp = ts;
    a.top = std::move(top);
    a.bottom = std::move(bottom);
  } else {
    a.top = std::make_shared<const TactileFrame>(synth::render_frame(contacts, geometry_, CameraId::Top, render_, ts));
    a.bottom =
        std::make_shared<const TactileFrame>(synth::render_frame(contacts, geometry_, CameraId::Bottom, render_, ts));
  }
  auto k = static_cast<std::size_t>(std::floor(local * imu_.rate_hz));
  k = std::min(k, imu_.samples.size() - 1);
  const Micros imu_ts = static_cast<Micros>(std::llround((since_ + static_cast<double>(k) / imu_.rate_hz) * 1e6));
  for (int m = 0; m < kImuModules; ++m) {
    const auto& ch = imu_.samples[k][static_cast<std::size_t>(m)];
    ImuSample s;
    s.module_id = static_cast<std::uint8_t>(m);
    s.timestamp = std::min(imu_ts, ts);
    for (int i = 0; i < 3; ++i) {
      s.accel[static_cast<std::size_t>(i)] = ch[static_cast<std::size_t>(i)];
      s.gyro[static_cast<std::size_t>(i)] = ch[static_cast<std::size_t>(3 + i)];
      s.mag[static_cast<std::size_t>(i)] = ch[static_cast<std::size_t>(6 + i)];
    }
    a.imu[static_cast<std::size_t>(m)] = s;
  }
  return a;
}

ModelRecognizer::ModelRecognizer(const model::FusionNet& net, const model::Params& params,
                                 const pipeline::PipelineConfig& config, std::uint64_t actor_seed,
                                 model::BranchMask mask)
    : net_(net), params_(params), config_(config), seed_(actor_seed), mask_(mask) {
  reset();
}

void ModelRecognizer::reset() {
  actor_ = std::make_unique<SyntheticActor>(seed_);
  const SensorGeometry g;
  const synth::RenderOptions r;
  builder_ = std::make_unique<pipeline::SampleBuilder>(g, r.width, r.height, config_);
  windows_ = std::make_unique<pipeline::WindowBuffer>(config_);
  last_ = ActionClass::Idle;
}

ActionClass ModelRecognizer::observe(const hrc::FrameTick& tick) {
  const double t = static_cast<double>(tick.time) / 1e6;
  auto s = std::make_shared<const pipeline::SyncedSample>(builder_->build(actor_->sample(t, tick.performed)));
  if (auto w = windows_->push(std::move(s))) last_ = net_.predict_window(*w, params_, mask_).label;
  return last_;
}

}  // namespace mmhar::runtime
