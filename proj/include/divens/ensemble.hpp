#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "divens/core.hpp"
#include "divens/metrics.hpp"
#include "divens/mlp.hpp"

namespace divens {

std::vector<PredictionMatrix> predictions_of(std::span<const ClassifierRecord> records);

// Entrywise arithmetic mean of equally shaped matrices.
PredictionMatrix average(std::span<const PredictionMatrix> members);

// alpha * a + (1 - alpha) * b
PredictionMatrix weighted_combine(const PredictionMatrix& a, const PredictionMatrix& b,
                                  double alpha);

// A set of members combined by unweighted averaging. The combined matrix is
// computed at construction; instances are immutable.
class Ensemble {
 public:
  explicit Ensemble(std::vector<ClassifierRecord> members);

  const std::vector<ClassifierRecord>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  const PredictionMatrix& combined() const { return combined_; }

  Ensemble with_member(ClassifierRecord member) const;
  // True when every member of other appears here with the same id and predictions.
  bool contains_all(const Ensemble& other) const;

 private:
  std::vector<ClassifierRecord> members_;
  PredictionMatrix combined_;
};

struct SweepPoint {
  double alpha;
  double gap;
};

struct SweepResult {
  std::vector<SweepPoint> grid;
  double best_alpha = 0.0;
  double best_gap = 0.0;
};

inline constexpr double kDefaultSweepStep = 0.05;

// GAP of alpha * a + (1 - alpha) * b for alpha = 0, step, ..., 1. The best
// point is the maximum, the smaller alpha on ties.
SweepResult alpha_sweep(const PredictionMatrix& a, const PredictionMatrix& b, const LabelSet& labels,
                        double grid_step = kDefaultSweepStep, std::size_t k = kDefaultTopK);

inline constexpr double kDefaultDiversityLambda = 0.3;
inline constexpr std::size_t kDefaultSequentialSize = 4;

struct SequentialBuild {
  Ensemble ensemble;  // member predictions on the validation rows
  std::vector<TrainResult> runs;
  // Ensemble mean on the training rows after the last member joined.
  MatrixF train_output;
};

// Member i (0-based) trains with seed base_config.seed + i. The first member
// uses plain BCE; each later one uses the diversity-aware loss against the
// mean training-set output of the members before it.
SequentialBuild sequential_diverse_build(const Dataset& train_data, const Dataset& val_data,
                                         const NetworkConfig& base_config,
                                         std::size_t target_size = kDefaultSequentialSize,
                                         double lambda = kDefaultDiversityLambda);

// Validation predictions of one member at its peak checkpoint and at a later,
// overfitted one.
struct CheckpointPair {
  PredictionMatrix peak;
  PredictionMatrix overfit;
  std::size_t peak_epoch = 0;
  std::size_t overfit_epoch = 0;
};

// The overfitted checkpoint is the one at min(overfit_factor * peak, final);
// overfit_factor = 0 selects the final epoch. Throws when that checkpoint or
// the peak one was not kept.
CheckpointPair checkpoint_pair(const TrainingHistory& history, const MatrixF& val_features,
                               std::size_t overfit_factor = 0);

struct CheckpointStudyReport {
  double gap_gain_peak = 0.0;
  double gap_gain_final = 0.0;
  double diversity_peak = 0.0;
  double diversity_final = 0.0;
  double ensemble_gap_peak = 0.0;
  double ensemble_gap_final = 0.0;
  double mean_member_gap_peak = 0.0;
  double mean_member_gap_final = 0.0;
};

// GAP gain = ensemble GAP minus the mean member GAP, for the all-peak and the
// all-overfit member sets, plus each set's mean pairwise diversity.
CheckpointStudyReport checkpoint_study(std::span<const CheckpointPair> members,
                                       const LabelSet& val_labels, std::size_t k = kDefaultTopK);

}  // namespace divens
