#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmhar/model/train.hpp"
#include "mmhar/pipeline/config.hpp"

namespace mmhar::model {

// Versioned binary file: magic "MMHRCKPT", u32 version, u64 header length,
// JSON header (model config, pipeline config, mask, training summary and the
// list of double sections), then the sections as little-endian doubles.
struct Checkpoint {
  FusionConfig model;
  pipeline::PipelineConfig pipeline;
  BranchMask mask;
  Params params;                  // weights used for inference
  std::optional<TrainState> state; // optimizer state for resume
  nlohmann::json info = nlohmann::json::object();
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
// Throws DataError on a malformed file, ConfigError on a version mismatch.
Checkpoint load_checkpoint(const std::string& path);

// CSV with header epoch,train_loss,train_acc,val_acc.
void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& metrics);

}  // namespace mmhar::model
