#pragma once

#include <vector>

#include "mmhar/model/network.hpp"
#include "mmhar/pipeline/dataset.hpp"
#include "mmhar/synth/synth.hpp"

namespace fixtures {

// Windows cut from synthetic recordings that cover every class.
inline std::vector<mmhar::pipeline::LabeledWindow> synth_windows(int recordings, double action_s, std::uint64_t seed0,
                                                                 const mmhar::pipeline::PipelineConfig& pc,
                                                                 double gap_s = 1.0) {
  std::vector<mmhar::pipeline::LabeledWindow> out;
  for (int r = 0; r < recordings; ++r) {
    auto s = mmhar::synth::make_script(mmhar::kAllActions, action_s, gap_s, seed0 + static_cast<std::uint64_t>(r));
    s.hand = r % 2 ? mmhar::Hand::Left : mmhar::Hand::Right;
    auto rec = mmhar::synth::gen_recording(s);
    for (auto& w : mmhar::pipeline::extract_labeled_windows(rec, pc, r)) out.push_back(std::move(w));
  }
  return out;
}

inline std::vector<mmhar::model::Example> examples(const std::vector<mmhar::pipeline::LabeledWindow>& v) {
  std::vector<mmhar::model::Example> e;
  for (const auto& w : v) e.push_back({&w.input, mmhar::class_index(w.label)});
  return e;
}

}  // namespace fixtures
