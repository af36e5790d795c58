#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

namespace mmhar::model {

// Shapes of the three-branch late-fusion classifier. The two video branches
// tokenize tubelets of tubelet_t frames x patch x patch pixels; the inertial
// branch groups imu_group consecutive timesteps (all 72 channels) per token.
struct FusionConfig {
  int window = 90;
  int side = 32;
  int tubelet_t = 10;
  int patch = 8;
  int embed_dim = 32;
  int heads = 4;
  int depth = 2;
  int ff_mult = 2;
  int imu_group = 10;
  int feature_dim = 32;
  int num_classes = 15;
  std::uint64_t seed = 7;

  // Throws ConfigError on divisibility violations.
  void validate() const;
  int video_tokens() const { return (window / tubelet_t) * (side / patch) * (side / patch); }
  int tubelet_volume() const { return tubelet_t * patch * patch; }
  int imu_tokens() const { return window / imu_group; }
  int imu_token_width() const;

  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

nlohmann::json to_json(const FusionConfig& c);
FusionConfig fusion_config_from_json(const nlohmann::json& j);

// Zeroes a branch's feature vector (unimodal ablations).
struct BranchMask {
  bool top = true;
  bool bottom = true;
  bool imu = true;

  static BranchMask imu_only() { return {false, false, true}; }
  static BranchMask video_only() { return {true, true, false}; }
  friend bool operator==(const BranchMask&, const BranchMask&) = default;
};

}  // namespace mmhar::model
