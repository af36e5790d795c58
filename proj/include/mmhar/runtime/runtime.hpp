#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "mmhar/eval/metrics.hpp"
#include "mmhar/hrc/hrc.hpp"
#include "mmhar/ingest/recording.hpp"
#include "mmhar/ingest/transport.hpp"
#include "mmhar/model/network.hpp"
#include "mmhar/pipeline/config.hpp"
#include "mmhar/pipeline/window.hpp"
#include "mmhar/synth/synth.hpp"

namespace mmhar::runtime {

// Labels one full window; `newest` is the timestamp of its last sample.
class WindowClassifier {
 public:
  virtual ~WindowClassifier() = default;
  virtual ActionClass classify(const pipeline::Window& w) const = 0;
  // Safe to call concurrently from several threads.
  virtual bool reentrant() const { return true; }
};

class ModelClassifier : public WindowClassifier {
 public:
  ModelClassifier(const model::FusionNet& net, const model::Params& params, model::BranchMask mask = {})
      : net_(net), params_(params), mask_(mask) {}
  ActionClass classify(const pipeline::Window& w) const override;

 private:
  const model::FusionNet& net_;
  const model::Params& params_;
  model::BranchMask mask_;
};

// Reports the ground-truth label at the window's newest frame.
class OracleClassifier : public WindowClassifier {
 public:
  explicit OracleClassifier(LabelStream truth) : truth_(std::move(truth)) {}
  ActionClass classify(const pipeline::Window& w) const override { return truth_.label_at(w.last()); }

 private:
  LabelStream truth_;
};

struct OnlineOptions {
  bool include_warmup = false;  // count frames before the first window
};

struct OnlineResult {
  std::vector<Micros> grid;     // Top-camera timestamps
  std::vector<bool> warmup;     // frame precedes the first window
  LabelStream gt;               // on the full grid
  LabelStream pred;             // on the full grid; warm-up frames are Idle
  LabelStream gt_scored;        // on the scored grid
  LabelStream pred_scored;
  std::vector<eval::SegmentScore> segments;
  eval::EventReport report;
  pipeline::SyncCounters sync;
  std::size_t windows = 0;
};

// Streams a recording through sync, stride-1 windowing and the classifier.
// Each window labels its newest frame; frames the synchronizer dropped keep
// the previous label. Throws DataError if the recording has no labels.
OnlineResult run_online(const ingest::Recording& rec, const pipeline::PipelineConfig& config,
                        const WindowClassifier& classifier, const OnlineOptions& options = {});

struct LiveOptions {
  std::size_t packet_queue = 512;
  std::size_t window_queue = 8;
  model::BranchMask mask;
};

struct LiveStats {
  std::size_t frames = 0;       // synced samples built
  std::size_t windows = 0;      // windows emitted
  std::size_t predictions = 0;  // windows classified
  double wall_seconds = 0.0;
  double stream_seconds = 0.0;   // recorded time covered by synced samples
  double prediction_fps = 0.0;   // predictions per wall second
  std::size_t packet_queue_high_water = 0;
  std::size_t window_queue_high_water = 0;
  double max_lag_s = 0.0;  // prediction wall time minus ideal arrival of its newest frame
  pipeline::SyncCounters sync;
  std::array<std::size_t, 3> received{};
  std::vector<ActionClass> labels;
};

// Subscribes to a running StreamServer, aligns causally, windows and
// classifies on a separate inference thread.
LiveStats run_live(const ingest::Endpoint& endpoint, const ingest::RecordingMeta& meta,
                   const pipeline::PipelineConfig& config, const WindowClassifier& classifier,
                   const LiveOptions& options = {});

// Synthetic user for closed-loop trials: renders frames and glove readings
// for whatever class it is currently performing.
class SyntheticActor {
 public:
  SyntheticActor(std::uint64_t seed, const SensorGeometry& geometry = {}, const synth::RenderOptions& render = {},
                 double style_spread = 1.0);
  // Returns the aligned sample for frame time t (s) while performing `c`.
  pipeline::AlignedSample sample(double t, ActionClass c);

 private:
  void begin(ActionClass c, double t);
  synth::Rng rng_;
  SensorGeometry geometry_;
  synth::RenderOptions render_;
  synth::SubjectStyle style_;
  ActionClass current_ = ActionClass::Idle;
  bool started_ = false;
  double since_ = 0.0;
  synth::ContactProfile contact_;
  synth::ImuProfile imu_;
  std::shared_ptr<const TactileFrame> idle_top_, idle_bottom_;
};

// Recognizer that runs the trained model on the actor's synthetic stream.
class ModelRecognizer : public hrc::Recognizer {
 public:
  ModelRecognizer(const model::FusionNet& net, const model::Params& params, const pipeline::PipelineConfig& config,
                  std::uint64_t actor_seed, model::BranchMask mask = {});
  void reset() override;
  ActionClass observe(const hrc::FrameTick& tick) override;

 private:
  const model::FusionNet& net_;
  const model::Params& params_;
  pipeline::PipelineConfig config_;
  std::uint64_t seed_;
  model::BranchMask mask_;
  std::unique_ptr<SyntheticActor> actor_;
  std::unique_ptr<pipeline::SampleBuilder> builder_;
  std::unique_ptr<pipeline::WindowBuffer> windows_;
  ActionClass last_ = ActionClass::Idle;
};

}  // namespace mmhar::runtime
