#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "divens/core.hpp"
#include "divens/mlp.hpp"
#include "divens/pooling.hpp"
#include "divens/synth.hpp"

namespace divens::testing {

inline PredictionMatrix random_predictions(std::size_t v, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  PredictionMatrix p(v, c);
  for (float& x : p.values()) x = u(rng);
  return p;
}

// Each video gets 1..max_pos positives.
inline LabelSet random_labels(std::size_t v, std::size_t c, std::size_t max_pos, std::mt19937_64& rng) {
  std::vector<std::vector<ClassId>> pos(v);
  std::vector<ClassId> all(c);
  for (std::size_t i = 0; i < c; ++i) all[i] = static_cast<ClassId>(i);
  std::uniform_int_distribution<std::size_t> count(1, std::min(max_pos, c));
  for (auto& p : pos) {
    std::shuffle(all.begin(), all.end(), rng);
    p.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count(rng)));
    std::sort(p.begin(), p.end());
  }
  return LabelSet(c, std::move(pos));
}

inline PredictionMatrix exact_predictions(const LabelSet& labels) {
  return PredictionMatrix(labels.dense());
}

inline FrameSequence random_sequence(std::size_t t, std::size_t d, std::mt19937_64& rng,
                                     float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  MatrixF m(t, d);
  for (float& x : m.values()) x = u(rng);
  return FrameSequence("v", std::move(m));
}

inline FrameSequence sequence_of(std::vector<std::vector<float>> rows) {
  MatrixF m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  return FrameSequence("v", std::move(m));
}

struct TrainVal {
  Dataset train;
  Dataset val;
};

// Mean-pooled synthetic data split by the generator's own partition.
inline TrainVal pooled_synth(const SynthConfig& config, PoolMethod method = PoolMethod::kMean) {
  const auto data = generate(config);
  const MatrixF features = pool_features(data.videos, method);
  auto part = [&](const std::vector<std::size_t>& idx) {
    return Dataset{features.select_rows(idx), data.labels.select_rows(idx)};
  };
  return {part(data.split.train), part(data.split.validation)};
}

}  // namespace divens::testing
