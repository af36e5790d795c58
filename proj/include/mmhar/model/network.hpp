#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "mmhar/core/action.hpp"
#include "mmhar/model/config.hpp"
#include "mmhar/model/params.hpp"
#include "mmhar/pipeline/window.hpp"

namespace mmhar::model {

struct Prediction {
  std::vector<double> logits;
  std::vector<double> probs;
  ActionClass label = ActionClass::Idle;
  double confidence = 0.0;
};

// Softmax + argmax with lowest-index tie break.
Prediction make_prediction(std::vector<double> logits);

// Row-major matrix used for activations.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
  double* row(int i) { return v.data() + static_cast<std::ptrdiff_t>(i) * cols; }
  const double* row(int i) const { return v.data() + static_cast<std::ptrdiff_t>(i) * cols; }
  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
};

struct Example {
  const pipeline::ModelInput* input = nullptr;
  int label = 0;
};

struct BatchResult {
  double loss = 0.0;       // mean cross-entropy
  std::size_t correct = 0; // argmax hits in the batch
};

enum class Branch { Top = 0, Bottom = 1, Imu = 2 };

class FusionNet {
 public:
  explicit FusionNet(FusionConfig config);

  const FusionConfig& config() const { return config_; }
  const ParamLayout& layout() const { return *layout_; }
  std::shared_ptr<const ParamLayout> layout_ptr() const { return layout_; }
  Params init_params() const { return Params::initialize(layout_, config_.seed); }
  Params init_params(std::uint64_t seed) const { return Params::initialize(layout_, seed); }

  // Tubelet tokens after projection and positional terms (N x D).
  Mat tubelet_embed(std::span<const float> video, const Params& p, Branch which) const;
  // Raw tubelet voxel blocks (N x t*p*p) before projection.
  Mat tubelets(std::span<const float> video) const;

  // Encodes one branch to its F-wide feature.
  std::vector<double> branch_features(const pipeline::ModelInput& in, const Params& p, Branch which) const;

  Prediction fuse_classify(std::span<const double> f_top, std::span<const double> f_bottom,
                           std::span<const double> f_imu, const Params& p) const;

  Prediction predict(const pipeline::ModelInput& in, const Params& p, BranchMask mask = {}) const;
  Prediction predict_window(const pipeline::Window& w, const Params& p, BranchMask mask = {}) const;

  // Mean cross-entropy over the batch and its gradient w.r.t. the flat
  // parameter vector (grad is resized and overwritten). Per-sample gradients
  // are reduced in batch order, so the result does not depend on the thread
  // count.
  BatchResult loss_and_grad(std::span<const Example> batch, const Params& p, std::vector<double>& grad,
                            BranchMask mask = {}) const;
  double loss(std::span<const Example> batch, const Params& p, BranchMask mask = {}) const;

  struct Impl;

 private:
  void check_input(const pipeline::ModelInput& in) const;

  FusionConfig config_;
  std::shared_ptr<ParamLayout> layout_;
  std::shared_ptr<const Impl> impl_;
};

// Self-attention probabilities of block 0, head 0 of a branch (test hook).
Mat attention_probs(const FusionNet& net, const pipeline::ModelInput& in, const Params& p, Branch which);

}  // namespace mmhar::model
