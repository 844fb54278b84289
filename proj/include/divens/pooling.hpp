#pragma once

// Frame-sequence to video-descriptor pooling: mean, mean+std, temporal
// regional max pooling with PCA whitening, and bag-of-words histograms.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "divens/core.hpp"

namespace divens {

struct FrameRange {
  std::size_t start;
  std::size_t end;  // exclusive
  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

inline constexpr std::size_t kNumTemporalRegions = 10;
inline constexpr double kDefaultWhitenEps = 1e-6;

class PcaWhitenModel {
 public:
  // basis is d x d with eigenvectors as columns.
  PcaWhitenModel(std::vector<double> mean, MatrixD basis, std::vector<double> scale);

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const MatrixD& basis() const { return basis_; }
  const std::vector<double>& scale() const { return scale_; }

  // scale * basis^T * (x - mean)
  std::vector<double> apply(std::span<const double> x) const;

 private:
  std::vector<double> mean_;
  MatrixD basis_;
  std::vector<double> scale_;
};

class Codebook {
 public:
  explicit Codebook(MatrixF centroids);

  std::size_t k() const { return centroids_.rows(); }
  std::size_t dim() const { return centroids_.cols(); }
  const MatrixF& centroids() const { return centroids_; }

  // Nearest centroid by squared Euclidean distance, lowest index on ties.
  std::size_t nearest(std::span<const float> x) const;

 private:
  MatrixF centroids_;
};

std::vector<float> mean_pool(const FrameSequence& seq);

// [mean ; std / ||std||], population std; zero std-half when ||std|| = 0.
std::vector<float> mean_std_pool(const FrameSequence& seq);

// Scales 1..4 contribute 1, 2, 3, 4 windows of width ceil(2T/(s+1)) with
// starts spread evenly over [0, T - width].
std::vector<FrameRange> temporal_regions(std::size_t num_frames);

// The ten region max-pooled, L2-normalized vectors of a sequence, one per row.
// These are the vectors the ROI whitening model is fitted on.
MatrixD roi_region_vectors(const FrameSequence& seq);

PcaWhitenModel fit_pca_whitening(const MatrixD& region_vectors, double eps = kDefaultWhitenEps);

std::vector<float> roi_pool(const FrameSequence& seq, const PcaWhitenModel& model);

struct KMeansResult {
  Codebook codebook;
  std::vector<std::size_t> assignment;
  // Objective after each assignment step, in iteration order.
  std::vector<double> inertia;
  std::size_t iterations = 0;
  bool converged = false;
};

KMeansResult kmeans_fit(const MatrixF& samples, std::size_t k, std::uint64_t seed,
                        std::size_t max_iters = 100);

std::vector<float> bow_pool(const FrameSequence& seq, const Codebook& codebook);

enum class PoolMethod { kMean, kMeanStd, kRoi, kBow };

PoolMethod pool_method_from_string(const std::string& s);
FeatureTag feature_tag_of(PoolMethod method);

// One pooled descriptor per sequence, one row each. ROI needs a whitening
// model and BoW a codebook.
MatrixF pool_features(std::span<const FrameSequence> sequences, PoolMethod method,
                      const Codebook* codebook = nullptr, const PcaWhitenModel* whiten = nullptr);

// Stacks every frame of every sequence into one matrix, e.g. for codebook fitting.
MatrixF stack_frames(std::span<const FrameSequence> sequences);

}  // namespace divens
