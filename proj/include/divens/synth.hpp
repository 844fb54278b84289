#pragma once

// Seeded synthetic multi-label video data with low-rank latent structure.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "divens/core.hpp"

namespace divens {

struct SynthConfig {
  std::size_t num_videos = 3000;
  std::size_t num_classes = 50;
  std::size_t feature_dim = 64;
  std::size_t frames_min = 10;
  std::size_t frames_max = 40;
  std::size_t latent_rank = 8;
  // Expected positives per video.
  double label_density = 3.0;
  // Per-frame Gaussian noise on the embedded features.
  double noise_sigma = 0.5;
  // Gaussian noise on the class affinities before thresholding; bounds how
  // learnable the labels are from the latent vector.
  double label_noise = 1.0;
  // Spread of the per-class affinity offsets (class frequency imbalance).
  double class_bias_spread = 0.5;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 1;

  void validate() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

struct SynthDataset {
  std::vector<FrameSequence> videos;
  LabelSet labels;
  Split split;
};

SynthDataset generate(const SynthConfig& config);

// A seeded partition of [0, n) with round(train_fraction * n) training indices.
Split make_split(std::size_t n, double train_fraction, std::uint64_t seed);

}  // namespace divens
