#include "mmhar/model/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mmhar/core/errors.hpp"

namespace mmhar::model {

double accuracy(const FusionNet& net, std::span<const Example> set, const Params& p, BranchMask mask) {
  if (set.empty()) return 0.0;
  std::vector<int> hit(set.size(), 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(set.size()); ++i) {
    const auto& ex = set[static_cast<std::size_t>(i)];
    hit[static_cast<std::size_t>(i)] = class_index(net.predict(*ex.input, p, mask).label) == ex.label;
  }
  return static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) / static_cast<double>(set.size());
}

namespace {

void check_classes(const FusionNet& net, std::span<const Example> set) {
  std::vector<int> count(static_cast<std::size_t>(net.config().num_classes), 0);
  for (const auto& ex : set) {
    if (ex.label < 0 || ex.label >= net.config().num_classes) throw DataError("train: label out of range");
    ++count[static_cast<std::size_t>(ex.label)];
  }
  std::string missing;
  for (std::size_t c = 0; c < count.size(); ++c)
    if (count[c] == 0) {
      if (!missing.empty()) missing += ", ";
      missing += c < kNumClasses ? std::string(to_string(class_from_index(static_cast<int>(c)))) : std::to_string(c);
    }
  if (!missing.empty()) throw DataError("train: classes missing from training split: " + missing);
}

}  // namespace

TrainResult train(const FusionNet& net, std::span<const Example> train_set, std::span<const Example> val_set,
                  const TrainOptions& o, const TrainState* resume, const EpochCallback& on_epoch) {
  if (train_set.empty()) throw DataError("train: empty training split");
  if (o.epochs <= 0 || o.batch_size <= 0 || !(o.lr > 0.0)) throw ConfigError("train: epochs, batch_size and lr must be positive");
  if (o.require_all_classes) check_classes(net, train_set);

  TrainState st;
  if (resume) {
    st = *resume;
    if (st.params.size() != net.layout().total()) throw ConfigError("train: resume state does not match model layout");
  } else {
    st.params = net.init_params();
    st.best = st.params;
  }
  const std::size_t P = st.params.size();
  st.m1.resize(P, 0.0);
  if (o.optimizer == Optimizer::Adam) st.m2.resize(P, 0.0);

  TrainResult r;
  std::vector<std::size_t> order(train_set.size());
  std::vector<double> grad;
  std::vector<Example> batch;
  bool capped = false;

  for (int epoch = st.epoch + 1; epoch <= o.epochs && !capped; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(o.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t seen = 0, correct = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(o.batch_size)) {
      if (o.max_steps > 0 && st.step >= o.max_steps) {
        capped = true;
        break;
      }
      batch.clear();
      for (std::size_t i = at; i < std::min(order.size(), at + static_cast<std::size_t>(o.batch_size)); ++i)
        batch.push_back(train_set[order[i]]);
      BatchResult br = net.loss_and_grad(batch, st.params, grad, o.mask);
      r.step_losses.push_back(br.loss);
      loss_sum += br.loss * static_cast<double>(batch.size());
      seen += batch.size();
      correct += br.correct;

      if (o.grad_clip > 0.0) {
        double n2 = 0.0;
        for (double g : grad) n2 += g * g;
        const double n = std::sqrt(n2);
        if (n > o.grad_clip)
          for (double& g : grad) g *= o.grad_clip / n;
      }
      ++st.step;
      auto w = st.params.flat();
      if (o.optimizer == Optimizer::Momentum) {
        for (std::size_t k = 0; k < P; ++k) {
          st.m1[k] = o.momentum * st.m1[k] + grad[k];
          w[k] -= o.lr * st.m1[k];
        }
      } else {
        const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(st.step));
        const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(st.step));
        for (std::size_t k = 0; k < P; ++k) {
          st.m1[k] = o.beta1 * st.m1[k] + (1.0 - o.beta1) * grad[k];
          st.m2[k] = o.beta2 * st.m2[k] + (1.0 - o.beta2) * grad[k] * grad[k];
          w[k] -= o.lr * (st.m1[k] / c1) / (std::sqrt(st.m2[k] / c2) + o.adam_eps);
        }
      }
      if (!st.params.all_finite()) throw NumericError("train: parameters became non-finite at step " + std::to_string(st.step));
    }
    if (seen == 0) break;

    EpochMetrics m;
    m.epoch = epoch;
    m.steps = st.step;
    m.train_loss = loss_sum / static_cast<double>(seen);
    m.train_acc = o.eval_train ? accuracy(net, train_set, st.params, o.mask)
                               : static_cast<double>(correct) / static_cast<double>(seen);
    m.val_acc = val_set.empty() ? m.train_acc : accuracy(net, val_set, st.params, o.mask);
    st.epoch = epoch;
    st.history.push_back(m);
    if (val_set.empty() || m.val_acc > st.best_val) {
      st.best_val = m.val_acc;
      st.best_epoch = epoch;
      st.best = st.params;
    }
    if (on_epoch) on_epoch(m);
  }

  r.best = st.best;
  r.best_epoch = st.best_epoch;
  r.metrics = st.history;
  r.state = std::move(st);
  return r;
}

}  // namespace mmhar::model
