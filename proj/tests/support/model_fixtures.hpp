#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mmhar/model/network.hpp"

namespace fixtures {

// Small configuration for finite-difference checks.
inline mmhar::model::FusionConfig small_config() {
  mmhar::model::FusionConfig c;
  c.window = 10;
  c.side = 4;
  c.tubelet_t = 5;
  c.patch = 2;
  c.embed_dim = 8;
  c.heads = 4;
  c.depth = 2;
  c.ff_mult = 1;
  c.imu_group = 1;
  c.feature_dim = 4;
  c.seed = 3;
  return c;
}

inline mmhar::pipeline::ModelInput random_input(const mmhar::model::FusionConfig& c, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  mmhar::pipeline::ModelInput in;
  in.frames = c.window;
  in.side = c.side;
  const auto px = static_cast<std::size_t>(c.window) * c.side * c.side;
  in.top.resize(px);
  in.bottom.resize(px);
  in.imu.resize(static_cast<std::size_t>(c.window) * mmhar::kImuBlockWidth);
  for (auto& v : in.top) v = n(rng);
  for (auto& v : in.bottom) v = n(rng);
  for (auto& v : in.imu) v = u(rng);
  return in;
}

// Max relative error |a - n| / max(|a|, |n|, 1e-6) per parameter group,
// using central differences of the mean batch loss.
inline std::map<std::string, double> gradient_check(const mmhar::model::FusionNet& net,
                                                    const mmhar::model::Params& p,
                                                    std::span<const mmhar::model::Example> batch, double eps,
                                                    mmhar::model::BranchMask mask = {}) {
  std::vector<double> grad;
  net.loss_and_grad(batch, p, grad, mask);
  mmhar::model::Params q = p;
  std::map<std::string, double> worst;
  for (const auto& g : p.layout().groups()) {
    double w = 0.0;
    for (std::size_t i = g.offset; i < g.offset + g.size; ++i) {
      const double orig = q.flat()[i];
      q.flat()[i] = orig + eps;
      const double lp = net.loss(batch, q, mask);
      q.flat()[i] = orig - eps;
      const double lm = net.loss(batch, q, mask);
      q.flat()[i] = orig;
      const double num = (lp - lm) / (2.0 * eps);
      const double den = std::max({std::abs(grad[i]), std::abs(num), 1e-6});
      w = std::max(w, std::abs(grad[i] - num) / den);
    }
    worst[g.name] = w;
  }
  return worst;
}

}  // namespace fixtures
