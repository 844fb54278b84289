#pragma once

// Straight-line reference implementations used only by the tests. None of
// them share ranking, pooling or statistics code with the library.

#include <cstddef>
#include <vector>

#include "divens/core.hpp"
#include "divens/pooling.hpp"

namespace divens::oracle {

// GAP by pairwise counting: an item's rank is the number of items ahead of
// it. No sorting or heaps. Quadratic, small instances only.
double gap_by_counting(const PredictionMatrix& preds, const LabelSet& labels, std::size_t k);

// Mean over frames with Kahan-compensated double accumulation.
std::vector<double> compensated_mean(const FrameSequence& seq);

// ROI pooling written step by step from the definition.
std::vector<double> roi_pool_scripted(const FrameSequence& seq, const PcaWhitenModel& model);

// Population Pearson correlation of two flat sequences, single pass over
// long double sums.
long double pearson_reference(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace divens::oracle

#include "divens/mlp.hpp"

namespace divens::oracle {

struct GradCheckResult {
  std::size_t parameters = 0;
  double max_rel_error = 0.0;
  // Parameter with the worst error, as (layer, flat index, is_bias).
  std::size_t worst_layer = 0;
  std::size_t worst_index = 0;
  bool worst_is_bias = false;
  // Parameters whose +-h probes changed a ReLU pattern and were re-probed
  // with a smaller step.
  std::size_t reduced_steps = 0;
  // Parameters sitting exactly on a kink at every step tried; excluded from
  // max_rel_error.
  std::size_t nondifferentiable = 0;
};

// Central differences of the loss with the dropout masks held fixed. The
// relative error of a pair (a, n) is |a - n| / max(|a|, |n|, floor).
GradCheckResult finite_difference_check(const NetworkD& net, const MatrixD& batch,
                                        const MatrixD& labels, const MatrixD* ensemble,
                                        double lambda, std::uint64_t mask_seed, double h,
                                        double floor);

}  // namespace divens::oracle
