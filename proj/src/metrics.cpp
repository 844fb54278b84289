#include "divens/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "divens/parallel.hpp"

namespace divens {

namespace {

// Strict "ranks ahead of" order for one prediction row.
inline bool ranks_ahead(const ScoredClass& a, const ScoredClass& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return a.class_id < b.class_id;
}

std::size_t gap_denominator(const LabelSet& labels, std::size_t k) {
  std::size_t d = 0;
  for (std::size_t v = 0; v < labels.num_videos(); ++v) {
    d += std::min(labels.positives(v).size(), k);
  }
  return d;
}

}  // namespace

std::vector<ScoredClass> top_k_select(std::span<const float> row, std::size_t k) {
  if (k == 0) throw std::invalid_argument("top_k_select: k must be >= 1");
  if (row.empty()) throw std::invalid_argument("empty prediction row");

  const std::size_t keep = std::min(k, row.size());
  std::vector<ScoredClass> heap;
  heap.reserve(keep);
  // With ranks_ahead as the heap comparator, front() is the weakest kept entry.
  for (std::size_t c = 0; c < keep; ++c) {
    heap.push_back({static_cast<ClassId>(c), row[c]});
  }
  std::make_heap(heap.begin(), heap.end(), ranks_ahead);
  for (std::size_t c = keep; c < row.size(); ++c) {
    // Later ids lose ties, so only a strictly larger confidence can enter.
    if (row[c] > heap.front().confidence) {
      std::pop_heap(heap.begin(), heap.end(), ranks_ahead);
      heap.back() = {static_cast<ClassId>(c), row[c]};
      std::push_heap(heap.begin(), heap.end(), ranks_ahead);
    }
  }
  std::sort(heap.begin(), heap.end(), ranks_ahead);
  return heap;
}

std::vector<RankedPrediction> ranked_top_k_list(const PredictionMatrix& preds,
                                                const LabelSet& labels, std::size_t k) {
  if (k == 0) throw std::invalid_argument("gap_at_k: k must be >= 1");
  require_aligned(preds, labels);

  const std::size_t per_video = std::min(k, preds.num_classes());
  std::vector<RankedPrediction> pooled(preds.num_videos() * per_video);
  parallel_for(preds.num_videos(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      const auto top = top_k_select(preds.row(v), k);
      RankedPrediction* out = pooled.data() + v * per_video;
      for (std::size_t i = 0; i < top.size(); ++i) {
        out[i] = {top[i].confidence, labels.is_positive(v, top[i].class_id)};
      }
    }
  });

  // Items with equal (confidence, relevant) are interchangeable, so the ranked
  // relevance sequence does not depend on the pooling order.
  std::sort(pooled.begin(), pooled.end(), [](const RankedPrediction& a, const RankedPrediction& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.relevant > b.relevant;
  });
  return pooled;
}

double gap_at_k(const PredictionMatrix& preds, const LabelSet& labels, std::size_t k) {
  const auto ranked = ranked_top_k_list(preds, labels, k);
  const std::size_t denominator = gap_denominator(labels, k);
  if (denominator == 0) throw std::invalid_argument("no positive labels");

  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!ranked[i].relevant) continue;
    ++hits;
    ap += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return ap / static_cast<double>(denominator);
}

double gap_oracle(const PredictionMatrix& preds, const LabelSet& labels, std::size_t k) {
  if (k == 0) throw std::invalid_argument("gap_oracle: k must be >= 1");
  require_aligned(preds, labels);
  std::vector<RankedPrediction> all;
  for (std::size_t v = 0; v < preds.num_videos(); ++v) {
    const auto row = preds.row(v);
    if (row.empty()) throw std::invalid_argument("empty prediction row");
    std::vector<ClassId> order(row.size());
    std::iota(order.begin(), order.end(), ClassId{0});
    std::stable_sort(order.begin(), order.end(), [&](ClassId a, ClassId b) { return row[a] > row[b]; });
    order.resize(std::min(k, order.size()));
    for (ClassId c : order) all.push_back({row[c], labels.is_positive(v, c)});
  }
  std::stable_sort(all.begin(), all.end(), [](const RankedPrediction& a, const RankedPrediction& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.relevant && !b.relevant;
  });
  const std::size_t denominator = gap_denominator(labels, k);
  if (denominator == 0) throw std::invalid_argument("no positive labels");
  double sum = 0.0;
  double hits = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].relevant) {
      hits += 1.0;
      sum += hits / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(denominator);
}

}  // namespace divens
