#include "mmhar/pipeline/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mmhar/core/errors.hpp"

namespace mmhar::pipeline {

std::vector<LabeledWindow> extract_labeled_windows(const ingest::Recording& rec, const PipelineConfig& config,
                                                   int recording_id, SyncCounters* counters) {
  if (!rec.labels) throw DataError("dataset: recording has no ground-truth labels");
  config.validate();
  auto aligned = synchronize(rec.imu, rec.top, rec.bottom, SyncOptions::from(config), counters);
  SampleBuilder builder(rec.meta.geometry, rec.meta.source_width, rec.meta.source_height, config);

  std::vector<int> labels(aligned.size());
  for (std::size_t i = 0; i < aligned.size(); ++i)
    labels[i] = class_index(rec.labels->label_at(aligned[i].timestamp));

  const auto w = static_cast<std::size_t>(config.window);
  const Micros min_span = static_cast<Micros>(config.nominal_span_s * (1.0 - config.span_tolerance) * 1e6);
  const Micros max_span = static_cast<Micros>(config.nominal_span_s * (1.0 + config.span_tolerance) * 1e6);
  std::vector<LabeledWindow> out;
  std::size_t i = 0;
  while (i < aligned.size()) {
    std::size_t j = i;
    while (j < aligned.size() && labels[j] == labels[i]) ++j;
    for (std::size_t s = i; s + w <= j; s += w) {
      Micros span = aligned[s + w - 1].timestamp - aligned[s].timestamp;
      if (w > 1 && (span < min_span || span > max_span)) continue;
      Window win;
      win.samples.reserve(w);
      for (std::size_t k = s; k < s + w; ++k)
        win.samples.push_back(std::make_shared<const SyncedSample>(builder.build_unit(aligned[k])));
      out.push_back({to_model_input(win), class_from_index(labels[i]), recording_id, aligned[s].timestamp});
    }
    i = j;
  }
  return out;
}

SplitStats compute_split_stats(std::span<const LabeledWindow> windows) {
  long double sum = 0.0L, sq = 0.0L;
  std::size_t n = 0;
  for (const auto& w : windows) {
    for (const auto* v : {&w.input.top, &w.input.bottom}) {
      for (float p : *v) {
        sum += p;
        sq += static_cast<long double>(p) * p;
      }
      n += v->size();
    }
  }
  SplitStats s;
  if (n == 0) return s;
  long double mean = sum / n;
  long double var = std::max(0.0L, sq / n - mean * mean);
  s.mean = static_cast<double>(mean);
  s.std = static_cast<double>(std::sqrt(var));
  return s;
}

void standardize_windows(std::span<LabeledWindow> windows, const SplitStats& stats) {
  for (auto& w : windows) {
    standardize(w.input.top, stats);
    standardize(w.input.bottom, stats);
  }
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

std::vector<Split> assign_splits(std::size_t n, std::uint64_t seed) {
  const auto n_train = static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n))));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Split> out(n, Split::Test);
  for (std::size_t k = 0; k < n; ++k)
    out[order[k]] = k < n_train ? Split::Train : (k < n_train + n_val ? Split::Validation : Split::Test);
  return out;
}

}  // namespace mmhar::pipeline
