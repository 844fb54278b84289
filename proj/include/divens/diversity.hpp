#pragma once

// Correlation-based pairwise diversity and wrong-example-set analysis.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "divens/core.hpp"
#include "divens/ensemble.hpp"
#include "divens/metrics.hpp"

namespace divens {

// 1 - Pearson correlation of the two flattened matrices, in [0, 2].
double pearson_diversity(const PredictionMatrix& a, const PredictionMatrix& b);

// Symmetric M x M matrix of pearson_diversity, zero diagonal.
MatrixD diversity_matrix(std::span<const PredictionMatrix> members);

double mean_pairwise_diversity(std::span<const PredictionMatrix> members);

// (i, j) = GAP(average(p_i, p_j)) - max(GAP(p_i), GAP(p_j)), zero diagonal.
MatrixD pair_gain_matrix(std::span<const PredictionMatrix> members, const LabelSet& labels,
                         std::size_t k = kDefaultTopK);

// nullopt when either sample has zero variance or fewer than 2 points.
std::optional<double> pearson_correlation(std::span<const double> x, std::span<const double> y);
// Pearson correlation of average ranks.
std::optional<double> spearman_correlation(std::span<const double> x, std::span<const double> y);

struct DiversityGainPoint {
  std::size_t i;
  std::size_t j;
  double diversity;
  double gain;
};

struct DiversityGainCorrelation {
  std::vector<DiversityGainPoint> points;
  std::optional<double> spearman;
  std::optional<double> pearson;
};

DiversityGainCorrelation diversity_gain_correlation(std::span<const PredictionMatrix> members,
                                                    const LabelSet& labels,
                                                    std::size_t k = kDefaultTopK);
DiversityGainCorrelation diversity_gain_from_matrices(const MatrixD& diversity, const MatrixD& gain);

inline constexpr double kDefaultWrongTheta = 0.9;

// (video, class) pairs whose prediction error is at least theta: missed
// positives with 1 - p >= theta and asserted negatives with p >= theta.
class WrongSet {
 public:
  WrongSet(double theta, std::size_t num_videos, std::size_t num_classes,
           std::vector<std::uint64_t> sorted_keys);

  double theta() const { return theta_; }
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_videos() const { return num_videos_; }
  // Sorted keys video * num_classes + class.
  const std::vector<std::uint64_t>& keys() const { return keys_; }
  bool contains(std::size_t video, ClassId cls) const;
  bool is_subset_of(const WrongSet& other) const;

  std::uint64_t key(std::size_t video, ClassId cls) const { return video * num_classes_ + cls; }
  std::size_t video_of(std::uint64_t key) const { return key / num_classes_; }
  ClassId class_of(std::uint64_t key) const { return static_cast<ClassId>(key % num_classes_); }

  WrongSet intersect(const WrongSet& other) const;
  WrongSet unite(const WrongSet& other) const;

  friend bool operator==(const WrongSet&, const WrongSet&) = default;

 private:
  double theta_;
  std::size_t num_videos_;
  std::size_t num_classes_;
  std::vector<std::uint64_t> keys_;
};

WrongSet wrong_set(const PredictionMatrix& pred, const LabelSet& labels,
                   double theta = kDefaultWrongTheta);

struct TrajectoryStep {
  std::size_t ensemble_size;
  std::size_t intersection_size;
  std::size_t union_size;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
};

// Sizes of the running intersection and union of the members' wrong sets.
Trajectory wrongset_trajectory(std::span<const PredictionMatrix> members, const LabelSet& labels,
                               double theta = kDefaultWrongTheta);

inline constexpr std::size_t kDefaultHistogramBins = 100;

struct ErrorHistogramShift {
  std::size_t bins = 0;
  std::size_t tracked_pairs = 0;
  // Error magnitude: 1 - p for positive pairs, p for negative pairs.
  std::vector<std::size_t> base_hist, extended_hist;
  // The same histograms split by label polarity.
  std::vector<std::size_t> base_hist_positive, extended_hist_positive;
  std::vector<std::size_t> base_hist_negative, extended_hist_negative;
  double base_mean_error = 0.0;
  double extended_mean_error = 0.0;
};

// Tracks the pairs base.combined gets wrong at theta and histograms their
// error under base and under extended. Bins are uniform on [0, 1], left
// closed, the last one closed on both sides.
ErrorHistogramShift error_histogram_shift(const Ensemble& base, const Ensemble& extended,
                                          const LabelSet& labels, double theta = kDefaultWrongTheta,
                                          std::size_t bins = kDefaultHistogramBins);

// Same, on already-combined outputs; no membership check.
ErrorHistogramShift error_histogram_shift(const PredictionMatrix& before, const PredictionMatrix& after,
                                          const LabelSet& labels, double theta = kDefaultWrongTheta,
                                          std::size_t bins = kDefaultHistogramBins);

}  // namespace divens
