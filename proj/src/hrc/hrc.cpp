#include "mmhar/hrc/hrc.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mmhar/core/errors.hpp"

namespace mmhar::hrc {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string_view to_string(Shape s) {
  switch (s) {
    case Shape::Square: return "square";
    case Shape::Diamond: return "diamond";
    case Shape::Hourglass: return "hourglass";
    case Shape::Triangle: return "triangle";
    case Shape::Circle: return "circle";
  }
  return "?";
}

std::optional<Shape> parse_shape(std::string_view name) {
  for (auto s : kAllShapes)
    if (to_string(s) == name) return s;
  return std::nullopt;
}

Path::Path(Shape shape, double scale) : shape_(shape), scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("path: scale must be positive");
  const double h = 0.5 * scale;
  switch (shape) {
    case Shape::Square: vertices_ = {{-h, -h}, {h, -h}, {h, h}, {-h, h}}; break;
    case Shape::Diamond: vertices_ = {{0, -h}, {h, 0}, {0, h}, {-h, 0}}; break;
    case Shape::Hourglass: vertices_ = {{-h, -h}, {h, -h}, {-h, h}, {h, h}}; break;
    case Shape::Triangle: {
      const double r = scale / std::sqrt(3.0);
      for (int i = 0; i < 3; ++i) {
        const double a = -kPi / 2 + 2.0 * kPi * i / 3.0;
        vertices_.push_back({r * std::cos(a), r * std::sin(a)});
      }
      break;
    }
    case Shape::Circle: perimeter_ = kPi * scale; return;
  }
  cumulative_.push_back(0.0);
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const auto& a = vertices_[i];
    const auto& b = vertices_[(i + 1) % vertices_.size()];
    cumulative_.push_back(cumulative_.back() + std::hypot(b.x - a.x, b.y - a.y));
  }
  perimeter_ = cumulative_.back();
}

Point2 Path::at(double s) const {
  s = std::fmod(s, perimeter_);
  if (s < 0.0) s += perimeter_;
  if (shape_ == Shape::Circle) {
    const double a = 2.0 * kPi * s / perimeter_;
    return {0.5 * scale_ * std::cos(a), 0.5 * scale_ * std::sin(a)};
  }
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - cumulative_.begin()) - 1));
  const std::size_t seg = std::min(i, vertices_.size() - 1);
  const auto& a = vertices_[seg];
  const auto& b = vertices_[(seg + 1) % vertices_.size()];
  const double len = cumulative_[seg + 1] - cumulative_[seg];
  const double f = len > 0.0 ? (s - cumulative_[seg]) / len : 0.0;
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
}

std::vector<Point2> trajectory_waypoints(Shape shape, double scale, int samples_per_lap) {
  if (samples_per_lap < 3) throw ConfigError("waypoints: need at least 3 samples per lap");
  Path p(shape, scale);
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(samples_per_lap));
  for (int k = 0; k < samples_per_lap; ++k) out.push_back(p.at(p.perimeter() * k / samples_per_lap));
  return out;
}

Point2 robot_step(RobotState& st, double dt) {
  if (!(dt > 0.0)) throw ConfigError("robot_step: dt must be positive");
  st.phase = std::fmod(st.phase + st.speed * dt, st.path.perimeter());
  return st.path.at(st.phase);
}

ActionClass OracleRecognizer::observe(const FrameTick& tick) {
  recent_.push_back(tick.performed);
  if (recent_.size() > window_) recent_.pop_front();
  if (recent_.size() < window_) return ActionClass::Idle;
  const ActionClass c = recent_.front();
  for (auto v : recent_)
    if (v != c) return ActionClass::Idle;
  return c;
}

std::vector<Shape> random_shape_order(std::mt19937_64& rng) {
  std::vector<Shape> s(kAllShapes.begin(), kAllShapes.end());
  std::shuffle(s.begin(), s.end(), rng);
  return s;
}

TrialLog closed_loop(Recognizer& rec, std::span<const Command> schedule, std::span<const Shape> shape_order,
                     const TrialOptions& o) {
  if (schedule.size() != 5) throw ConfigError("closed_loop: schedule must hold exactly 5 commands");
  if (shape_order.size() != 5) throw ConfigError("closed_loop: shape order must hold exactly 5 shapes");
  if (o.debounce < 1) throw ConfigError("closed_loop: debounce must be >= 1");
  if (!(o.frame_rate_hz > 0.0) || !(o.timeout_s > 0.0)) throw ConfigError("closed_loop: rate and timeout must be positive");
  if (o.delay_min_s < 0.0 || o.delay_max_s < o.delay_min_s) throw ConfigError("closed_loop: bad reaction delay range");
  for (const auto& c : schedule)
    if (c.cls == ActionClass::Idle) throw ConfigError("closed_loop: Idle cannot be commanded");

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> delay(o.delay_min_s, o.delay_max_s);
  TrialLog log;
  log.shape_order.assign(shape_order.begin(), shape_order.end());
  log.debounce = o.debounce;
  rec.reset();

  RobotState robot{Path(shape_order[0], o.scale), o.speed, 0.0};
  const double dt = 1.0 / o.frame_rate_hz;
  std::size_t cmd = 0;
  double cmd_time = schedule[0].time_s;
  double actor_start = cmd_time + delay(rng);
  double first_perform = -1.0;
  int streak = 0;
  Point2 pose = robot.path.at(0.0);
  std::optional<double> finished_at;

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (finished_at && t > *finished_at + o.tail_s) break;
    FrameTick tick{k, static_cast<Micros>(std::llround(t * 1e6)), ActionClass::Idle};
    const bool active = cmd < schedule.size();
    if (active && t >= actor_start) {
      tick.performed = schedule[cmd].cls;
      if (first_perform < 0.0) first_perform = t;
    }
    const ActionClass label = rec.observe(tick);
    if (k > 0) pose = robot_step(robot, dt);
    if (!active) continue;
    if (t < cmd_time) continue;
    streak = label == schedule[cmd].cls ? streak + 1 : 0;
    if (streak >= o.debounce) {
      Transition tr;
      tr.cls = schedule[cmd].cls;
      tr.command_s = cmd_time;
      tr.actor_start_s = first_perform;
      tr.recognized_s = t;
      tr.before = shape_order[cmd % 5];
      tr.after = shape_order[(cmd + 1) % 5];
      log.transitions.push_back(tr);
      robot.path = Path(tr.after, o.scale);
      robot.phase = 0.0;
      ++cmd;
      streak = 0;
      first_perform = -1.0;
      if (cmd < schedule.size()) {
        cmd_time = std::max(schedule[cmd].time_s, t);
        actor_start = cmd_time + delay(rng);
      } else {
        finished_at = t;
      }
      continue;
    }
    if (t - cmd_time > o.timeout_s) {
      log.failure = TrialFailure{cmd, schedule[cmd].cls, cmd_time, t};
      log.final_pose = pose;
      std::ostringstream msg;
      msg << "closed_loop: command " << cmd << " (" << to_string(schedule[cmd].cls) << ") not recognized within "
          << o.timeout_s << " s";
      throw TrialError(msg.str(), log);
    }
  }
  log.final_pose = pose;
  return log;
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

BoxStats box_stats(std::vector<double> v) {
  BoxStats b;
  b.n = v.size();
  if (v.empty()) return b;
  std::sort(v.begin(), v.end());
  b.min = v.front();
  b.max = v.back();
  b.q1 = quantile(v, 0.25);
  b.median = quantile(v, 0.5);
  b.q3 = quantile(v, 0.75);
  b.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return b;
}

LatencyStats latency_stats(std::span<const TrialLog> logs) {
  if (logs.empty()) throw DataError("latency_stats: no trial logs");
  LatencyStats s;
  std::vector<double> all;
  for (const auto& log : logs)
    for (const auto& tr : log.transitions) {
      all.push_back(tr.latency_s());
      s.per_class[tr.cls].push_back(tr.latency_s());
    }
  s.count = all.size();
  if (all.empty()) return s;
  const BoxStats b = box_stats(all);
  s.mean = b.mean;
  s.median = b.median;
  if (all.size() > 1) {
    double ss = 0.0;
    for (double x : all) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(all.size() - 1));
  }
  for (const auto& [c, v] : s.per_class) s.boxes[c] = box_stats(v);
  return s;
}

void write_trial_jsonl(std::ostream& out, const TrialLog& log) {
  for (std::size_t i = 0; i < log.transitions.size(); ++i) {
    const auto& t = log.transitions[i];
    nlohmann::json j = {{"trial", log.trial_id},
                        {"index", i},
                        {"class", std::string(to_string(t.cls))},
                        {"command_s", t.command_s},
                        {"actor_start_s", t.actor_start_s},
                        {"recognized_s", t.recognized_s},
                        {"latency_s", t.latency_s()},
                        {"shape_before", std::string(to_string(t.before))},
                        {"shape_after", std::string(to_string(t.after))},
                        {"debounce", log.debounce}};
    out << j.dump() << '\n';
  }
  if (log.failure) {
    const auto& f = *log.failure;
    nlohmann::json j = {{"trial", log.trial_id},
                        {"index", f.command},
                        {"class", std::string(to_string(f.cls))},
                        {"command_s", f.command_s},
                        {"failed_at_s", f.gave_up_s},
                        {"failure", "timeout"}};
    out << j.dump() << '\n';
  }
}

void write_latency_csv(std::ostream& out, const LatencyStats& s) {
  out << "class,n,min,q1,median,q3,max,mean\n" << std::setprecision(6);
  auto row = [&](std::string_view name, const BoxStats& b) {
    out << name << ',' << b.n << ',' << b.min << ',' << b.q1 << ',' << b.median << ',' << b.q3 << ',' << b.max << ','
        << b.mean << '\n';
  };
  for (const auto& [c, b] : s.boxes) row(to_string(c), b);
  std::vector<double> all;
  for (const auto& [c, v] : s.per_class) all.insert(all.end(), v.begin(), v.end());
  row("all", box_stats(all));
}

void write_latency_rows(std::ostream& out, std::span<const TrialLog> logs) {
  out << "trial,index,class,latency_s,shape_before,shape_after\n" << std::setprecision(6);
  for (const auto& log : logs)
    for (std::size_t i = 0; i < log.transitions.size(); ++i) {
      const auto& t = log.transitions[i];
      out << log.trial_id << ',' << i << ',' << to_string(t.cls) << ',' << t.latency_s() << ',' << to_string(t.before)
          << ',' << to_string(t.after) << '\n';
    }
}

TrialConfig TrialConfig::from_document(const KvDocument& doc) {
  doc.reject_unknown({"seed", "debounce", "timeout_s", "speed", "scale", "delay_min_s", "delay_max_s",
                      "frame_rate_hz", "subjects", "shapes", "interval_s"});
  TrialConfig c;
  auto& o = c.options;
  o.seed = static_cast<std::uint64_t>(doc.get_int("seed", 1));
  o.debounce = static_cast<int>(doc.get_int("debounce", 5));
  o.timeout_s = doc.get_double("timeout_s", 60.0);
  o.speed = doc.get_double("speed", 0.1);
  o.scale = doc.get_double("scale", 1.0);
  o.delay_min_s = doc.get_double("delay_min_s", 0.5);
  o.delay_max_s = doc.get_double("delay_max_s", 1.5);
  o.frame_rate_hz = doc.get_double("frame_rate_hz", 30.0);
  c.subjects = static_cast<int>(doc.get_int("subjects", 1));
  c.interval_s = doc.get_double("interval_s", 8.0);
  if (c.subjects < 1) throw ConfigError("trial: subjects must be >= 1");
  const std::string shapes = doc.get_or("shapes", "random");
  if (shapes != "random") {
    std::stringstream in(shapes);
    std::string item;
    while (std::getline(in, item, ',')) {
      auto s = parse_shape(trim(item));
      if (!s) throw ConfigError("trial: unknown shape '" + trim(item) + "'");
      c.shapes.push_back(*s);
    }
    if (c.shapes.size() != 5) throw ConfigError("trial: shapes must list exactly 5 entries");
  }
  for (const auto& line : doc.body()) {
    std::istringstream in(line);
    std::string name;
    double t = 0.0;
    if (!(in >> name >> t)) throw ConfigError("trial: expected '<class> <command_time_s>', got '" + line + "'");
    auto cls = parse_action(name);
    if (!cls || *cls == ActionClass::Idle) throw ConfigError("trial: bad commanded class '" + name + "'");
    c.schedule.push_back({*cls, t});
  }
  if (!c.schedule.empty() && c.schedule.size() != 5) throw ConfigError("trial: schedule must list exactly 5 commands");
  return c;
}

KvDocument TrialConfig::to_document() const {
  std::ostringstream t;
  t.precision(17);
  const auto& o = options;
  t << "seed = " << o.seed << "\ndebounce = " << o.debounce << "\ntimeout_s = " << o.timeout_s << "\nspeed = " << o.speed
    << "\nscale = " << o.scale << "\ndelay_min_s = " << o.delay_min_s << "\ndelay_max_s = " << o.delay_max_s
    << "\nframe_rate_hz = " << o.frame_rate_hz << "\nsubjects = " << subjects << "\ninterval_s = " << interval_s
    << "\nshapes = ";
  if (shapes.empty()) t << "random";
  for (std::size_t i = 0; i < shapes.size(); ++i) t << (i ? "," : "") << to_string(shapes[i]);
  t << '\n';
  for (const auto& c : schedule) t << to_string(c.cls) << ' ' << c.time_s << '\n';
  return KvDocument::parse(t.str());
}

std::vector<Command> TrialConfig::schedule_for(std::mt19937_64& rng) const {
  if (!schedule.empty()) return schedule;
  std::vector<ActionClass> pool(kAllActions.begin(), kAllActions.end() - 1);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<Command> out;
  for (int i = 0; i < 5; ++i) out.push_back({pool[static_cast<std::size_t>(i)], 2.0 + interval_s * i});
  return out;
}

}  // namespace mmhar::hrc
