#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "../support/dataset_fixtures.hpp"
#include "mmhar/core/errors.hpp"
#include "mmhar/model/train.hpp"

using namespace mmhar;
using namespace mmhar::model;

namespace {

// 32 windows: one synthetic recording, every class for 6 s, idle gaps 3 s.
const std::vector<pipeline::LabeledWindow>& overfit_set() {
  static const auto set = [] {
    pipeline::PipelineConfig pc;
    auto w = fixtures::synth_windows(1, 6.0, 77, pc, 3.0);
    std::sort(w.begin(), w.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    w.resize(std::min<std::size_t>(w.size(), 32));
    auto st = pipeline::compute_split_stats(w);
    pipeline::standardize_windows(w, st);
    return w;
  }();
  return set;
}

FusionConfig toy() {
  FusionConfig c;
  c.embed_dim = 16;
  c.feature_dim = 16;
  c.depth = 1;
  return c;
}

}  // namespace

TEST_CASE("toy model overfits 32 windows within 300 steps") {
  const auto& set = overfit_set();
  REQUIRE(set.size() == 32);
  auto ex = fixtures::examples(set);
  FusionNet net(toy());
  TrainOptions o;
  o.epochs = 150;
  o.max_steps = 300;
  o.require_all_classes = false;
  o.eval_train = true;
  o.grad_clip = 1.0;
  auto r = train(net, ex, ex, o);
  long reached = -1;
  for (const auto& m : r.metrics)
    if (m.train_acc == 1.0) {
      reached = m.steps;
      break;
    }
  MESSAGE("100% training accuracy at step " << reached);
  CHECK(reached > 0);
  CHECK(reached <= 300);
  CHECK(accuracy(net, ex, r.best) == 1.0);

  // Smoothed loss: 10-step block means never increase.
  const auto& l = r.step_losses;
  REQUIRE(l.size() >= 20);
  std::vector<double> means;
  for (std::size_t i = 0; i + 10 <= l.size(); i += 10) {
    double s = 0;
    for (std::size_t k = i; k < i + 10; ++k) s += l[k];
    means.push_back(s / 10);
  }
  std::size_t violations = 0;
  for (std::size_t i = 1; i < means.size(); ++i) violations += means[i] > means[i - 1];
  std::ostringstream trace;
  for (double m : means) trace << m << " ";
  CHECK_MESSAGE(violations == 0, "block means: " << trace.str());
}

TEST_CASE("training is deterministic and resumable") {
  const auto& set = overfit_set();
  auto ex = fixtures::examples(set);
  std::vector<Example> tr(ex.begin(), ex.begin() + 24), va(ex.begin() + 24, ex.end());
  FusionConfig c = toy();
  c.embed_dim = 8;
  c.feature_dim = 8;
  c.heads = 2;
  FusionNet net(c);
  TrainOptions o;
  o.epochs = 4;
  o.batch_size = 8;
  o.require_all_classes = false;
  o.optimizer = Optimizer::Adam;
  o.lr = 1e-3;
  auto a = train(net, tr, va, o);
  auto b = train(net, tr, va, o);
  CHECK(a.metrics == b.metrics);
  CHECK(a.step_losses == b.step_losses);
  CHECK(std::equal(a.best.flat().begin(), a.best.flat().end(), b.best.flat().begin()));

  TrainOptions half = o;
  half.epochs = 2;
  auto h = train(net, tr, va, half);
  auto resumed = train(net, tr, va, o, &h.state);
  CHECK(resumed.metrics == a.metrics);
  CHECK(std::equal(resumed.state.params.flat().begin(), resumed.state.params.flat().end(),
                   a.state.params.flat().begin()));
  CHECK(resumed.best_epoch == a.best_epoch);
}

TEST_CASE("training preconditions") {
  const auto& set = overfit_set();
  auto ex = fixtures::examples(set);
  std::vector<Example> partial;
  for (const auto& e : ex)
    if (e.label != class_index(ActionClass::Tapping)) partial.push_back(e);
  FusionNet net(toy());
  TrainOptions o;
  o.epochs = 1;
  try {
    train(net, partial, partial, o);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("tapping") != std::string::npos);
  }
  CHECK_THROWS_AS(train(net, std::span<const Example>{}, partial, o), DataError);
  o.batch_size = 0;
  o.require_all_classes = false;
  CHECK_THROWS_AS(train(net, partial, partial, o), ConfigError);
}
