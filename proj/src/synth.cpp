#include "divens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace divens {

namespace {

// Platform-independent draws on top of mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

void SynthConfig::validate() const {
  if (num_videos == 0 || num_classes == 0 || feature_dim == 0 || latent_rank == 0) {
    throw std::invalid_argument("synth config: counts must be positive");
  }
  if (latent_rank > std::min(feature_dim, num_classes)) {
    throw std::invalid_argument("synth config: latent_rank must be <= min(feature_dim, num_classes)");
  }
  if (frames_min == 0 || frames_min > frames_max || frames_max > FrameSequence::kMaxFrames) {
    throw std::invalid_argument("synth config: need 1 <= frames_min <= frames_max <= 300");
  }
  if (!(label_density >= 1.0)) throw std::invalid_argument("synth config: label_density must be >= 1");
  if (label_density > static_cast<double>(num_classes)) {
    throw std::invalid_argument("synth config: label_density " + std::to_string(label_density) +
                                " exceeds num_classes " + std::to_string(num_classes));
  }
  if (!(noise_sigma >= 0.0) || !(label_noise >= 0.0) || !(class_bias_spread >= 0.0)) {
    throw std::invalid_argument("synth config: noise levels must be >= 0");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("synth config: train_fraction must be in (0, 1)");
  }
}

Split make_split(std::size_t n, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed ^ 0xD1B54A32D192ED03ULL);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  Split split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

SynthDataset generate(const SynthConfig& config) {
  config.validate();
  const std::size_t V = config.num_videos;
  const std::size_t C = config.num_classes;
  const std::size_t d = config.feature_dim;
  const std::size_t r = config.latent_rank;
  Rng rng(config.seed);

  MatrixD topics(r, C);
  for (double& x : topics.values()) x = rng.normal();
  std::vector<double> class_bias(C);
  for (double& b : class_bias) b = config.class_bias_spread * rng.normal();
  MatrixD embedding(d, r);
  const double embed_scale = 1.0 / std::sqrt(static_cast<double>(r));
  for (double& x : embedding.values()) x = embed_scale * rng.normal();

  MatrixD latent(V, r);
  for (double& x : latent.values()) x = rng.normal();

  const double affinity_scale = 1.0 / std::sqrt(static_cast<double>(r));
  MatrixD affinity(V, C);
  for (std::size_t v = 0; v < V; ++v) {
    for (std::size_t c = 0; c < C; ++c) {
      double s = class_bias[c];
      for (std::size_t j = 0; j < r; ++j) s += latent(v, j) * topics(j, c) * affinity_scale;
      affinity(v, c) = s + config.label_noise * rng.normal();
    }
  }

  // Global threshold so that the positive fraction is label_density / C.
  std::vector<double> sorted(affinity.values().begin(), affinity.values().end());
  const auto n_pos = static_cast<std::size_t>(
      std::llround(config.label_density * static_cast<double>(V)));
  const std::size_t cut = sorted.size() - std::min(n_pos, sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(cut), sorted.end());
  const double threshold = sorted[cut];

  std::vector<std::vector<ClassId>> positives(V);
  for (std::size_t v = 0; v < V; ++v) {
    for (std::size_t c = 0; c < C; ++c) {
      if (affinity(v, c) >= threshold) positives[v].push_back(static_cast<ClassId>(c));
    }
  }

  std::vector<FrameSequence> videos;
  videos.reserve(V);
  std::vector<double> center(d);
  for (std::size_t v = 0; v < V; ++v) {
    const std::size_t T = config.frames_min + rng.below(config.frames_max - config.frames_min + 1);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < r; ++j) s += embedding(i, j) * latent(v, j);
      center[i] = s;
    }
    MatrixF frames(T, d);
    for (std::size_t t = 0; t < T; ++t) {
      auto row = frames.row(t);
      for (std::size_t i = 0; i < d; ++i) {
        row[i] = static_cast<float>(center[i] + config.noise_sigma * rng.normal());
      }
    }
    char id[32];
    std::snprintf(id, sizeof(id), "vid%06zu", v);
    videos.emplace_back(id, std::move(frames));
  }

  return {std::move(videos), LabelSet(C, std::move(positives)),
          make_split(V, config.train_fraction, config.split_seed)};
}

}  // namespace divens
