#include "divens/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace divens {

namespace {

double l2_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

void l2_normalize_in_place(std::span<double> x) {
  const double n = l2_norm(x);
  if (n > 0.0) {
    for (double& v : x) v /= n;
  }
}

std::vector<float> to_float(std::span<const double> x) {
  return {x.begin(), x.end()};
}

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double squared_distance(std::span<const float> x, std::span<const double> c) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double diff = static_cast<double>(x[j]) - c[j];
    s += diff * diff;
  }
  return s;
}

}  // namespace

PcaWhitenModel::PcaWhitenModel(std::vector<double> mean, MatrixD basis, std::vector<double> scale)
    : mean_(std::move(mean)), basis_(std::move(basis)), scale_(std::move(scale)) {
  const std::size_t d = mean_.size();
  if (d == 0 || basis_.rows() != d || basis_.cols() != d || scale_.size() != d) {
    throw DimensionError("PCA whitening model: inconsistent dimensions");
  }
  for (double s : scale_) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("PCA whitening model: scale entries must be positive and finite");
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      double dot = 0.0;
      for (std::size_t r = 0; r < d; ++r) dot += basis_(r, a) * basis_(r, b);
      const double expected = a == b ? 1.0 : 0.0;
      if (std::abs(dot - expected) > 1e-5) {
        throw std::invalid_argument("PCA whitening model: basis is not orthonormal");
      }
    }
  }
}

std::vector<double> PcaWhitenModel::apply(std::span<const double> x) const {
  const std::size_t d = dim();
  if (x.size() != d) throw DimensionError("PCA whitening: input dim mismatch");
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < d; ++i) centered[i] = x[i] - mean_[i];
  std::vector<double> out(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    const double c = centered[r];
    const auto basis_row = basis_.row(r);
    for (std::size_t j = 0; j < d; ++j) out[j] += basis_row[j] * c;
  }
  for (std::size_t j = 0; j < d; ++j) out[j] *= scale_[j];
  return out;
}

Codebook::Codebook(MatrixF centroids) : centroids_(std::move(centroids)) {
  if (centroids_.rows() == 0 || centroids_.cols() == 0) {
    throw std::invalid_argument("codebook needs at least one centroid of positive dim");
  }
  for (float x : centroids_.values()) {
    if (!std::isfinite(x)) throw std::invalid_argument("codebook has a non-finite centroid");
  }
  std::vector<std::size_t> order(centroids_.rows());
  std::iota(order.begin(), order.end(), 0);
  auto row_less = [&](std::size_t a, std::size_t b) {
    const auto ra = centroids_.row(a);
    const auto rb = centroids_.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(order.begin(), order.end(), row_less);
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto ra = centroids_.row(order[i - 1]);
    const auto rb = centroids_.row(order[i]);
    if (std::equal(ra.begin(), ra.end(), rb.begin())) {
      throw std::invalid_argument("codebook has duplicate centroids");
    }
  }
}

std::size_t Codebook::nearest(std::span<const float> x) const {
  if (x.size() != dim()) throw DimensionError("codebook: frame dim mismatch");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k(); ++c) {
    const auto centroid = centroids_.row(c);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = static_cast<double>(x[j]) - centroid[j];
      s += diff * diff;
    }
    if (s < best_dist) {
      best_dist = s;
      best = c;
    }
  }
  return best;
}

std::vector<float> mean_pool(const FrameSequence& seq) {
  const std::size_t d = seq.dim();
  std::vector<double> sum(d, 0.0);
  for (std::size_t t = 0; t < seq.num_frames(); ++t) {
    const auto f = seq.frame(t);
    for (std::size_t j = 0; j < d; ++j) sum[j] += f[j];
  }
  const double inv = 1.0 / static_cast<double>(seq.num_frames());
  for (double& s : sum) s *= inv;
  return to_float(sum);
}

std::vector<float> mean_std_pool(const FrameSequence& seq) {
  const std::size_t d = seq.dim();
  const double count = static_cast<double>(seq.num_frames());
  std::vector<double> mean(d, 0.0);
  for (std::size_t t = 0; t < seq.num_frames(); ++t) {
    const auto f = seq.frame(t);
    for (std::size_t j = 0; j < d; ++j) mean[j] += f[j];
  }
  for (double& m : mean) m /= count;

  std::vector<double> sigma(d, 0.0);
  for (std::size_t t = 0; t < seq.num_frames(); ++t) {
    const auto f = seq.frame(t);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = f[j] - mean[j];
      sigma[j] += diff * diff;
    }
  }
  for (double& s : sigma) s = std::sqrt(s / count);
  l2_normalize_in_place(sigma);

  std::vector<float> out;
  out.reserve(2 * d);
  out.insert(out.end(), mean.begin(), mean.end());
  out.insert(out.end(), sigma.begin(), sigma.end());
  return out;
}

std::vector<FrameRange> temporal_regions(std::size_t num_frames) {
  if (num_frames == 0) throw std::invalid_argument("temporal_regions: T must be >= 1");
  const std::size_t T = num_frames;
  std::vector<FrameRange> regions;
  regions.reserve(kNumTemporalRegions);
  for (std::size_t s = 1; s <= 4; ++s) {
    // ceil(2T / (s + 1)) clamped to [1, T]
    const std::size_t width = std::clamp<std::size_t>((2 * T + s) / (s + 1), 1, T);
    const std::size_t slack = T - width;
    for (std::size_t i = 0; i < s; ++i) {
      const std::size_t start = s == 1 ? 0 : (i * slack) / (s - 1);
      regions.push_back({start, start + width});
    }
  }
  return regions;
}

MatrixD roi_region_vectors(const FrameSequence& seq) {
  const auto regions = temporal_regions(seq.num_frames());
  const std::size_t d = seq.dim();
  MatrixD out(regions.size(), d);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    auto dst = out.row(r);
    std::fill(dst.begin(), dst.end(), -std::numeric_limits<double>::infinity());
    for (std::size_t t = regions[r].start; t < regions[r].end; ++t) {
      const auto f = seq.frame(t);
      for (std::size_t j = 0; j < d; ++j) dst[j] = std::max(dst[j], static_cast<double>(f[j]));
    }
    l2_normalize_in_place(dst);
  }
  return out;
}

PcaWhitenModel fit_pca_whitening(const MatrixD& region_vectors, double eps) {
  const std::size_t n = region_vectors.rows();
  const std::size_t d = region_vectors.cols();
  if (n < 2) throw std::invalid_argument("fit_pca_whitening: need at least 2 samples");
  if (d == 0) throw std::invalid_argument("fit_pca_whitening: dim must be positive");
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("fit_pca_whitening: eps must be finite and >= 0");
  }
  for (double x : region_vectors.values()) {
    if (!std::isfinite(x)) throw std::invalid_argument("fit_pca_whitening: non-finite input");
  }

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = region_vectors.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);

  // Population covariance.
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                              static_cast<Eigen::Index>(d));
  Eigen::VectorXd centered(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = region_vectors.row(i);
    for (std::size_t j = 0; j < d; ++j) centered(static_cast<Eigen::Index>(j)) = r[j] - mean[j];
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("fit_pca_whitening: eigendecomposition failed");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();    // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  MatrixD basis(d, d);
  std::vector<double> scale(d);
  for (std::size_t out_col = 0; out_col < d; ++out_col) {
    const auto src = static_cast<Eigen::Index>(d - 1 - out_col);
    // Sign convention: the largest-magnitude entry of each column is positive.
    Eigen::Index arg = 0;
    vectors.col(src).cwiseAbs().maxCoeff(&arg);
    const double sign = vectors(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < d; ++r) {
      basis(r, out_col) = sign * vectors(static_cast<Eigen::Index>(r), src);
    }
    const double lambda = std::max(0.0, values(src));
    if (!(lambda + eps > 0.0)) {
      throw std::invalid_argument("fit_pca_whitening: zero-variance direction requires eps > 0");
    }
    scale[out_col] = 1.0 / std::sqrt(lambda + eps);
  }
  return PcaWhitenModel(std::move(mean), std::move(basis), std::move(scale));
}

std::vector<float> roi_pool(const FrameSequence& seq, const PcaWhitenModel& model) {
  if (model.dim() != seq.dim()) throw DimensionError("roi_pool: model dim != frame dim");
  const MatrixD regions = roi_region_vectors(seq);
  const std::size_t d = seq.dim();
  std::vector<double> sum(d, 0.0);
  for (std::size_t r = 0; r < regions.rows(); ++r) {
    const auto region = regions.row(r);
    // An all-zero region carries no signal and contributes nothing.
    if (l2_norm(region) == 0.0) continue;
    const auto w = model.apply(region);
    for (std::size_t j = 0; j < d; ++j) sum[j] += w[j];
  }
  l2_normalize_in_place(sum);
  return to_float(sum);
}

KMeansResult kmeans_fit(const MatrixF& samples, std::size_t k, std::uint64_t seed,
                        std::size_t max_iters) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  if (k == 0) throw std::invalid_argument("kmeans_fit: k must be >= 1");
  if (n < k) {
    throw std::invalid_argument("kmeans_fit: " + std::to_string(n) + " samples < k = " +
                                std::to_string(k));
  }
  if (d == 0) throw std::invalid_argument("kmeans_fit: dim must be positive");

  std::mt19937_64 rng(seed);
  MatrixD centroids(k, d);
  auto set_centroid = [&](std::size_t c, std::size_t sample) {
    const auto src = samples.row(sample);
    auto dst = centroids.row(c);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
  };

  // k-means++ seeding.
  std::vector<double> nearest_sq(n, std::numeric_limits<double>::infinity());
  set_centroid(0, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest_sq[i] = std::min(nearest_sq[i], squared_distance(samples.row(i), centroids.row(c - 1)));
      total += nearest_sq[i];
    }
    if (total <= 0.0) {
      throw std::invalid_argument("kmeans_fit: fewer distinct samples than k");
    }
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest_sq[i] <= 0.0) continue;
      acc += nearest_sq[i];
      pick = i;
      if (acc > target) break;
    }
    set_centroid(c, pick);
  }

  std::vector<std::size_t> assignment(n, k);
  std::vector<double> dist(n, 0.0);
  std::vector<double> inertia_log;
  bool converged = false;
  std::size_t iter = 0;
  for (; iter < max_iters; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double s = squared_distance(samples.row(i), centroids.row(c));
        if (s < best_dist) {
          best_dist = s;
          best = c;
        }
      }
      if (assignment[i] != best) changed = true;
      assignment[i] = best;
      dist[i] = best_dist;
      inertia += best_dist;
    }
    inertia_log.push_back(inertia);
    if (!changed) {
      converged = true;
      break;
    }

    // Update step, reduced in sample order.
    MatrixD sums(k, d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = samples.row(i);
      auto s = sums.row(assignment[i]);
      for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto dst = centroids.row(c);
      const auto s = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) dst[j] = s[j] / static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      // Re-seed at the sample farthest from its own centroid.
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (dist[i] > dist[far]) far = i;
      }
      set_centroid(c, far);
      --counts[assignment[far]];
      assignment[far] = c;
      counts[c] = 1;
      dist[far] = 0.0;
    }
  }

  MatrixF out(k, d);
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = static_cast<float>(centroids.values()[i]);
  return KMeansResult{Codebook(std::move(out)), std::move(assignment), std::move(inertia_log),
                      std::min(iter + 1, max_iters), converged};
}

std::vector<float> bow_pool(const FrameSequence& seq, const Codebook& codebook) {
  if (codebook.dim() != seq.dim()) throw DimensionError("bow_pool: codebook dim != frame dim");
  std::vector<std::size_t> counts(codebook.k(), 0);
  for (std::size_t t = 0; t < seq.num_frames(); ++t) ++counts[codebook.nearest(seq.frame(t))];
  std::vector<float> out(codebook.k());
  const double inv = 1.0 / static_cast<double>(seq.num_frames());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    out[c] = static_cast<float>(static_cast<double>(counts[c]) * inv);
  }
  return out;
}

PoolMethod pool_method_from_string(const std::string& s) {
  if (s == "mean") return PoolMethod::kMean;
  if (s == "meanstd" || s == "mean_std") return PoolMethod::kMeanStd;
  if (s == "roi") return PoolMethod::kRoi;
  if (s == "bow") return PoolMethod::kBow;
  throw std::invalid_argument("unknown pooling method '" + s + "'");
}

FeatureTag feature_tag_of(PoolMethod method) {
  switch (method) {
    case PoolMethod::kMean:
      return FeatureTag::kMean;
    case PoolMethod::kMeanStd:
      return FeatureTag::kMeanStd;
    case PoolMethod::kRoi:
      return FeatureTag::kRoi;
    case PoolMethod::kBow:
      return FeatureTag::kBow;
  }
  return FeatureTag::kExternal;
}

MatrixF pool_features(std::span<const FrameSequence> sequences, PoolMethod method,
                      const Codebook* codebook, const PcaWhitenModel* whiten) {
  if (sequences.empty()) throw std::invalid_argument("pool_features: no sequences");
  if (method == PoolMethod::kBow && codebook == nullptr) {
    throw std::invalid_argument("pool_features: BoW pooling needs a codebook");
  }
  if (method == PoolMethod::kRoi && whiten == nullptr) {
    throw std::invalid_argument("pool_features: ROI pooling needs a whitening model");
  }
  auto pool_one = [&](const FrameSequence& s) {
    switch (method) {
      case PoolMethod::kMean:
        return mean_pool(s);
      case PoolMethod::kMeanStd:
        return mean_std_pool(s);
      case PoolMethod::kRoi:
        return roi_pool(s, *whiten);
      case PoolMethod::kBow:
        return bow_pool(s, *codebook);
    }
    return std::vector<float>{};
  };
  std::vector<float> first = pool_one(sequences.front());
  MatrixF out(sequences.size(), first.size());
  std::copy(first.begin(), first.end(), out.row(0).begin());
  for (std::size_t i = 1; i < sequences.size(); ++i) {
    const auto v = pool_one(sequences[i]);
    if (v.size() != first.size()) throw DimensionError("pool_features: inconsistent frame dims");
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

MatrixF stack_frames(std::span<const FrameSequence> sequences) {
  if (sequences.empty()) return {};
  const std::size_t d = sequences.front().dim();
  std::size_t total = 0;
  for (const auto& s : sequences) {
    if (s.dim() != d) throw DimensionError("stack_frames: inconsistent frame dims");
    total += s.num_frames();
  }
  MatrixF out(total, d);
  std::size_t row = 0;
  for (const auto& s : sequences) {
    for (std::size_t t = 0; t < s.num_frames(); ++t, ++row) {
      const auto f = s.frame(t);
      std::copy(f.begin(), f.end(), out.row(row).begin());
    }
  }
  return out;
}

}  // namespace divens
