#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "divens/core.hpp"

namespace divens {

struct ScoredClass {
  ClassId class_id;
  float confidence;
  friend bool operator==(const ScoredClass&, const ScoredClass&) = default;
};

struct RankedPrediction {
  float confidence;
  bool relevant;
};

inline constexpr std::size_t kDefaultTopK = 20;

// The min(k, row.size()) highest-confidence entries, sorted by confidence
// descending, ties by smaller class id. O(C log k) with a bounded heap.
std::vector<ScoredClass> top_k_select(std::span<const float> row, std::size_t k);

// Global average precision over the concatenated per-video top-k lists.
//
// Every video contributes its top-k (confidence, relevant) pairs. The pooled
// list is ranked by confidence, equal confidences placing relevant items
// first, and the score is sum_i precision@i * rel(i) / D with
// D = sum_v min(#positives(v), k).
double gap_at_k(const PredictionMatrix& preds, const LabelSet& labels,
                std::size_t k = kDefaultTopK);

// Naive route to the same value: full sort per row, stable global sort,
// running-sum AP. Meant for small instances.
double gap_oracle(const PredictionMatrix& preds, const LabelSet& labels,
                  std::size_t k = kDefaultTopK);

// The pooled, globally ranked list gap_at_k scores. Exposed for inspection.
std::vector<RankedPrediction> ranked_top_k_list(const PredictionMatrix& preds,
                                                const LabelSet& labels, std::size_t k);

}  // namespace divens
