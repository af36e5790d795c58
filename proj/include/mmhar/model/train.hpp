#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mmhar/model/network.hpp"

namespace mmhar::model {

enum class Optimizer { Momentum, Adam };

struct TrainOptions {
  int epochs = 30;
  int batch_size = 16;
  double lr = 1e-2;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  Optimizer optimizer = Optimizer::Momentum;
  std::uint64_t seed = 1;
  BranchMask mask;
  long max_steps = 0;     // 0 = no step cap
  double grad_clip = 0.0; // global L2 clip, 0 = off
  bool require_all_classes = true;
  bool eval_train = false; // full-set train accuracy at epoch end
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  long steps = 0;
  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  Params params;
  std::vector<double> m1;
  std::vector<double> m2;
  int epoch = 0;  // completed epochs
  long step = 0;
  Params best;
  double best_val = -1.0;
  int best_epoch = 0;
  std::vector<EpochMetrics> history;
};

struct TrainResult {
  Params best;
  int best_epoch = 0;
  std::vector<EpochMetrics> metrics;
  std::vector<double> step_losses;
  TrainState state;
};

// Fraction of examples whose argmax matches the label.
double accuracy(const FusionNet& net, std::span<const Example> set, const Params& p, BranchMask mask = {});

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Mini-batch training. Batches follow a permutation seeded by (seed, epoch);
// the returned params are those at the best validation accuracy (earliest on
// ties, last epoch when the validation set is empty). `resume` continues a
// previous state up to options.epochs total epochs.
TrainResult train(const FusionNet& net, std::span<const Example> train_set, std::span<const Example> val_set,
                  const TrainOptions& options, const TrainState* resume = nullptr,
                  const EpochCallback& on_epoch = {});

}  // namespace mmhar::model
