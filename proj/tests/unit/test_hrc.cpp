#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mmhar/hrc/hrc.hpp"

using namespace mmhar;
using namespace mmhar::hrc;

namespace {

class Never : public Recognizer {
 public:
  ActionClass observe(const FrameTick&) override { return ActionClass::Idle; }
};

std::vector<Command> schedule() {
  return {{ActionClass::Tapping, 1.0},
          {ActionClass::Rubbing, 2.0},
          {ActionClass::Poking, 3.0},
          {ActionClass::Shaking, 30.0},
          {ActionClass::Lingering, 31.0}};
}

}  // namespace

TEST_CASE("waypoints") {
  auto sq = trajectory_waypoints(Shape::Square, 1.0, 4);
  REQUIRE(sq.size() == 4);
  const Point2 corners[] = {{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
  for (int i = 0; i < 4; ++i) {
    CHECK(sq[static_cast<std::size_t>(i)].x == doctest::Approx(corners[i].x));
    CHECK(sq[static_cast<std::size_t>(i)].y == doctest::Approx(corners[i].y));
  }
  Path c(Shape::Circle, 1.0);
  auto q = c.at(c.perimeter() / 4);
  CHECK(std::abs(q.x - 0.0) <= 1e-9);
  CHECK(std::abs(q.y - 0.5) <= 1e-9);
  for (auto s : kAllShapes) {
    auto w = trajectory_waypoints(s, 1.0, 64);
    REQUIRE(w.size() == 64);
    const double step = Path(s, 1.0).perimeter() / 64;
    auto next = Path(s, 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      // Arc spacing: consecutive samples sit one step apart along the path.
      auto p = next.at(static_cast<double>(i) * step);
      CHECK(std::hypot(p.x - w[i].x, p.y - w[i].y) <= 1e-9);
    }
    // Chord spacing is uniform on straight edges.
    if (s == Shape::Square) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        const auto& a = w[i];
        const auto& b = w[(i + 1) % w.size()];
        CHECK(std::hypot(b.x - a.x, b.y - a.y) == doctest::Approx(step).epsilon(0.01));
      }
    }
    CHECK(parse_shape(to_string(s)) == s);
  }
  CHECK(Path(Shape::Diamond, 1.0).perimeter() == doctest::Approx(4 * std::sqrt(0.5)));
  CHECK(Path(Shape::Hourglass, 1.0).perimeter() == doctest::Approx(2 + 2 * std::sqrt(2.0)));
  CHECK(Path(Shape::Triangle, 1.0).perimeter() == doctest::Approx(3.0));
  CHECK(Path(Shape::Circle, 1.0).perimeter() == doctest::Approx(M_PI));
}

TEST_CASE("robot stepping") {
  RobotState s{Path(Shape::Square, 1.0), 0.1, 0.0};
  CHECK(s.path.perimeter() / s.speed == doctest::Approx(40.0));
  const auto start = s.path.at(0.0);
  Point2 p{};
  for (int i = 0; i < 400; ++i) p = robot_step(s, 0.1);
  CHECK(std::abs(p.x - start.x) <= 1e-6);
  CHECK(std::abs(p.y - start.y) <= 1e-6);
  RobotState a{Path(Shape::Hourglass, 1.0), 0.1, 0.0}, b = a;
  const double lap = a.path.perimeter() / 0.1;
  robot_step(a, lap / 2);
  auto pa = robot_step(a, lap / 2);
  auto pb = robot_step(b, lap);
  CHECK(std::abs(pa.x - pb.x) <= 1e-9);
  CHECK(std::abs(pa.y - pb.y) <= 1e-9);
}

TEST_CASE("closed loop with oracle follows the latency decomposition") {
  const double frame = 1.0 / 30;
  std::vector<double> means;
  for (auto first : kAllShapes) {
    std::vector<Shape> order{first};
    for (auto s : kAllShapes)
      if (s != first) order.push_back(s);
    OracleRecognizer oracle;
    TrialOptions o;
    o.seed = 4;
    auto log = closed_loop(oracle, schedule(), order, o);
    REQUIRE(log.completed());
    REQUIRE(log.transitions.size() == 5);
    double sum = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      const auto& t = log.transitions[i];
      CHECK(t.after == order[(i + 1) % 5]);
      CHECK(t.before == order[i]);
      CHECK(t.latency_s() > 0);
      const double delta = t.actor_start_s - t.command_s;
      CHECK(delta >= o.delay_min_s - 1e-9);
      CHECK(delta <= o.delay_max_s + frame);
      const double expect = delta + 89 * frame + o.debounce * frame;
      CHECK(std::abs(t.latency_s() - expect) <= frame + 1e-9);
      CHECK(t.latency_s() >= 89 * frame);
      sum += t.latency_s();
    }
    means.push_back(sum / 5);
  }
  const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
  CHECK(*hi - *lo <= frame);
}

TEST_CASE("effective command time and zero delay floor") {
  OracleRecognizer oracle;
  TrialOptions o;
  o.delay_min_s = o.delay_max_s = 0.0;
  std::vector<Command> s{{ActionClass::Tapping, 0.0},
                         {ActionClass::Rubbing, 0.0},
                         {ActionClass::Poking, 0.0},
                         {ActionClass::Shaking, 0.0},
                         {ActionClass::Lingering, 0.0}};
  auto log = closed_loop(oracle, s, std::vector<Shape>(kAllShapes.begin(), kAllShapes.end()), o);
  for (std::size_t i = 1; i < 5; ++i)
    CHECK(log.transitions[i].command_s == log.transitions[i - 1].recognized_s);
  for (const auto& t : log.transitions) CHECK(t.latency_s() >= 89.0 / 30 - 1e-9);
}

TEST_CASE("timeout raises a trial error with the partial log") {
  Never never;
  TrialOptions o;
  o.timeout_s = 5.0;
  try {
    closed_loop(never, schedule(), std::vector<Shape>(kAllShapes.begin(), kAllShapes.end()), o);
    FAIL("expected TrialError");
  } catch (const TrialError& e) {
    REQUIRE(e.log().failure);
    CHECK(e.log().failure->command == 0);
    CHECK(e.log().transitions.empty());
    CHECK(e.log().failure->gave_up_s - e.log().failure->command_s > 5.0);
  }
  std::vector<Command> four(schedule().begin(), schedule().begin() + 4);
  CHECK_THROWS_AS(closed_loop(never, four, std::vector<Shape>(kAllShapes.begin(), kAllShapes.end()), o), ConfigError);
}

TEST_CASE("latency statistics") {
  TrialLog one;
  one.transitions = {{ActionClass::Tapping, 0.0, 0.0, 3.5}};
  auto s1 = latency_stats(std::vector<TrialLog>{one});
  CHECK(s1.mean == 3.5);
  CHECK(s1.median == 3.5);
  CHECK(s1.sd == 0.0);
  TrialLog three;
  three.transitions = {{ActionClass::Tapping, 1.0, 0, 3.0}, {ActionClass::Rubbing, 0.0, 0, 4.0},
                       {ActionClass::Tapping, 1.0, 0, 10.0}};
  auto s = latency_stats(std::vector<TrialLog>{three});
  CHECK(s.mean == doctest::Approx(5.0));
  CHECK(s.median == doctest::Approx(4.0));
  CHECK(s.sd == doctest::Approx(std::sqrt((9.0 + 1.0 + 16.0) / 2)));
  std::size_t n = 0;
  for (const auto& [c, v] : s.per_class) n += v.size();
  CHECK(n == 3);
  CHECK(s.per_class[ActionClass::Tapping] == std::vector<double>{2.0, 9.0});
  CHECK(s.boxes[ActionClass::Tapping].median == doctest::Approx(5.5));
  CHECK_THROWS_AS(latency_stats(std::vector<TrialLog>{}), DataError);
  std::ostringstream csv;
  write_latency_csv(csv, s);
  CHECK(csv.str().rfind("class,n,min,q1,median,q3,max,mean", 0) == 0);
}

TEST_CASE("trial configuration") {
  auto doc = KvDocument::parse("seed = 3\ndebounce = 7\nsubjects = 10\nshapes = circle,square,diamond,triangle,hourglass\n"
                               "tapping 1\nrubbing 2\npoking 3\nshaking 4\nlingering 5\n");
  auto c = TrialConfig::from_document(doc);
  CHECK(c.options.debounce == 7);
  CHECK(c.subjects == 10);
  REQUIRE(c.shapes.size() == 5);
  CHECK(c.shapes[0] == Shape::Circle);
  REQUIRE(c.schedule.size() == 5);
  auto back = TrialConfig::from_document(c.to_document());
  CHECK(back.options.debounce == 7);
  CHECK(back.schedule.size() == 5);
  CHECK_THROWS_AS(TrialConfig::from_document(KvDocument::parse("speeed = 1\n")), ConfigError);
  std::mt19937_64 rng(1);
  auto gen = TrialConfig{}.schedule_for(rng);
  REQUIRE(gen.size() == 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) CHECK(gen[i].cls != gen[j].cls);
  auto order = random_shape_order(rng);
  CHECK(std::is_permutation(order.begin(), order.end(), kAllShapes.begin()));
}
