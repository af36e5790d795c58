#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mmhar/core/action.hpp"
#include "mmhar/ingest/recording.hpp"
#include "mmhar/pipeline/window.hpp"

namespace mmhar::pipeline {

struct LabeledWindow {
  ModelInput input;
  ActionClass label = ActionClass::Idle;
  int recording = 0;
  Micros start = 0;
};

// Cuts every constant-label run of the recording's ground truth into
// consecutive non-overlapping windows of `config.window` samples. Frames are
// left in [0, 1]; standardize per split afterwards.
std::vector<LabeledWindow> extract_labeled_windows(const ingest::Recording& rec, const PipelineConfig& config,
                                                   int recording_id, SyncCounters* counters = nullptr);

// Scalar mean / population std over all video pixels of the split.
SplitStats compute_split_stats(std::span<const LabeledWindow> windows);
void standardize_windows(std::span<LabeledWindow> windows, const SplitStats& stats);

enum class Split : std::uint8_t { Train, Validation, Test };
std::string_view to_string(Split s);

// Assigns recordings to splits 60/20/20 (rounded), shuffled by seed.
std::vector<Split> assign_splits(std::size_t recordings, std::uint64_t seed);

}  // namespace mmhar::pipeline
