#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmhar/core/action.hpp"
#include "mmhar/core/errors.hpp"
#include "mmhar/core/kv_document.hpp"
#include "mmhar/core/types.hpp"

namespace mmhar::hrc {

enum class Shape : std::uint8_t { Square, Diamond, Hourglass, Triangle, Circle };
inline constexpr std::array<Shape, 5> kAllShapes = {Shape::Square, Shape::Diamond, Shape::Hourglass, Shape::Triangle,
                                                     Shape::Circle};
std::string_view to_string(Shape s);
std::optional<Shape> parse_shape(std::string_view name);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

// Closed planar path centered on the origin. Polygons have side `scale`
// (Diamond: diagonal `scale`; Hourglass: bowtie inside a scale x scale box);
// Circle has diameter `scale`. Traversal starts at the first vertex (Circle:
// angle 0) and runs counter-clockwise.
class Path {
 public:
  Path(Shape shape, double scale);
  Shape shape() const { return shape_; }
  double scale() const { return scale_; }
  double perimeter() const { return perimeter_; }
  // Point at arc length s, wrapped to [0, perimeter).
  Point2 at(double s) const;
  const std::vector<Point2>& vertices() const { return vertices_; }

 private:
  Shape shape_;
  double scale_;
  std::vector<Point2> vertices_;
  std::vector<double> cumulative_;
  double perimeter_ = 0.0;
};

// Arc-length-uniform samples of one lap, starting at the path origin.
std::vector<Point2> trajectory_waypoints(Shape shape, double scale, int samples_per_lap);

struct RobotState {
  Path path{Shape::Square, 1.0};
  double speed = 0.1;  // m/s
  double phase = 0.0;  // arc length along the current lap
};

// Advances along the path by speed * dt with wraparound.
Point2 robot_step(RobotState& state, double dt);

// One camera-rate tick of the simulated trial.
struct FrameTick {
  std::size_t index = 0;
  Micros time = 0;
  ActionClass performed = ActionClass::Idle;  // what the actor is doing
};

class Recognizer {
 public:
  virtual ~Recognizer() = default;
  virtual void reset() {}
  // Exactly one label per frame, in frame order.
  virtual ActionClass observe(const FrameTick& tick) = 0;
};

// Emits the actor's label once a full window of frames agrees on it; Idle
// until then. Models a perfect classifier behind the moving window.
class OracleRecognizer : public Recognizer {
 public:
  explicit OracleRecognizer(std::size_t window = 90) : window_(window) {}
  void reset() override { recent_.clear(); }
  ActionClass observe(const FrameTick& tick) override;

 private:
  std::size_t window_;
  std::deque<ActionClass> recent_;
};

struct Command {
  ActionClass cls = ActionClass::Idle;
  double time_s = 0.0;
};

struct TrialOptions {
  int debounce = 5;
  double timeout_s = 60.0;
  double frame_rate_hz = 30.0;
  double speed = 0.1;
  double scale = 1.0;
  double delay_min_s = 0.5;  // actor reaction delay, uniform
  double delay_max_s = 1.5;
  std::uint64_t seed = 1;
  double tail_s = 1.0;  // simulated time kept after the last transition
};

struct Transition {
  ActionClass cls = ActionClass::Idle;
  double command_s = 0.0;      // effective command time
  double actor_start_s = 0.0;  // first frame the actor performs the class
  double recognized_s = 0.0;
  Shape before = Shape::Square;
  Shape after = Shape::Square;
  double latency_s() const { return recognized_s - command_s; }
};

struct TrialFailure {
  std::size_t command = 0;
  ActionClass cls = ActionClass::Idle;
  double command_s = 0.0;
  double gave_up_s = 0.0;
};

struct TrialLog {
  std::string trial_id;
  std::vector<Transition> transitions;
  std::optional<TrialFailure> failure;
  std::vector<Shape> shape_order;
  int debounce = 5;
  Point2 final_pose;
  bool completed() const { return !failure && transitions.size() == 5; }
};

// Thrown by closed_loop when a commanded class is not recognized before the
// timeout; carries the partial log.
class TrialError : public DataError {
 public:
  TrialError(const std::string& what, TrialLog log) : DataError(what), log_(std::move(log)) {}
  const TrialLog& log() const noexcept { return log_; }

 private:
  TrialLog log_;
};

// Effective command time is max(scheduled, previous transition). The shape
// after transition i is shape_order[(i + 1) % 5].
TrialLog closed_loop(Recognizer& recognizer, std::span<const Command> schedule, std::span<const Shape> shape_order,
                     const TrialOptions& options);

// Random permutation of the five shapes.
std::vector<Shape> random_shape_order(std::mt19937_64& rng);

struct BoxStats {
  std::size_t n = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};

BoxStats box_stats(std::vector<double> values);

struct LatencyStats {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single value
  std::map<ActionClass, std::vector<double>> per_class;
  std::map<ActionClass, BoxStats> boxes;
};

LatencyStats latency_stats(std::span<const TrialLog> logs);

void write_trial_jsonl(std::ostream& out, const TrialLog& log);
// Per-class summary rows (class,n,min,q1,median,q3,max,mean) plus an "all" row.
void write_latency_csv(std::ostream& out, const LatencyStats& s);
// Raw per-action rows (trial,index,class,latency_s,shape_before,shape_after).
void write_latency_rows(std::ostream& out, std::span<const TrialLog> logs);

// Trial configuration document. Keys: seed, debounce, timeout_s, speed,
// scale, delay_min_s, delay_max_s, frame_rate_hz, subjects, shapes
// (comma list or "random"), interval_s; body lines `class command_time_s`.
struct TrialConfig {
  TrialOptions options;
  int subjects = 1;
  std::vector<Command> schedule;  // empty: five random distinct classes
  std::vector<Shape> shapes;      // empty: random per trial
  double interval_s = 8.0;        // spacing of generated commands

  static TrialConfig from_document(const KvDocument& doc);
  KvDocument to_document() const;
  // Schedule used for one subject (fixed or drawn from rng).
  std::vector<Command> schedule_for(std::mt19937_64& rng) const;
};

}  // namespace mmhar::hrc
