#include "divens/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <stdexcept>

#include "divens/parallel.hpp"

namespace divens {

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double pearson_diversity(const PredictionMatrix& a, const PredictionMatrix& b) {
  if (a.num_videos() != b.num_videos() || a.num_classes() != b.num_classes()) {
    throw DimensionError("pearson_diversity: matrices differ in shape");
  }
  const auto x = a.values();
  const auto y = b.values();
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  if (vx <= 0.0 || vy <= 0.0) {
    throw std::invalid_argument("constant predictions: diversity undefined");
  }
  const double r = std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
  return 1.0 - r;
}

MatrixD diversity_matrix(std::span<const PredictionMatrix> members) {
  const std::size_t m = members.size();
  if (m < 2) throw std::invalid_argument("diversity_matrix: need >= 2 members");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
  }
  MatrixD out(m, m, 0.0);
  parallel_for(pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const auto [i, j] = pairs[p];
      const double d = pearson_diversity(members[i], members[j]);
      out(i, j) = d;
      out(j, i) = d;
    }
  });
  return out;
}

double mean_pairwise_diversity(std::span<const PredictionMatrix> members) {
  const MatrixD d = diversity_matrix(members);
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = i + 1; j < d.cols(); ++j, ++count) s += d(i, j);
  }
  return s / static_cast<double>(count);
}

MatrixD pair_gain_matrix(std::span<const PredictionMatrix> members, const LabelSet& labels,
                         std::size_t k) {
  const std::size_t m = members.size();
  if (m < 2) throw std::invalid_argument("pair_gain_matrix: need >= 2 members");
  std::vector<double> single(m);
  for (std::size_t i = 0; i < m; ++i) single[i] = gap_at_k(members[i], labels, k);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
  }
  MatrixD out(m, m, 0.0);
  parallel_for(pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const auto [i, j] = pairs[p];
      const PredictionMatrix both[] = {members[i], members[j]};
      const double g = gap_at_k(average(both), labels, k) - std::max(single[i], single[j]);
      out(i, j) = g;
      out(j, i) = g;
    }
  });
  return out;
}

std::optional<double> pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("pearson_correlation: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov += (x[i] - mx) * (y[i] - my);
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
  }
  if (vx <= 0.0 || vy <= 0.0) return std::nullopt;
  return std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
}

std::optional<double> spearman_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("spearman_correlation: length mismatch");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_correlation(rx, ry);
}

DiversityGainCorrelation diversity_gain_from_matrices(const MatrixD& diversity, const MatrixD& gain) {
  if (diversity.rows() != gain.rows() || diversity.cols() != gain.cols() ||
      diversity.rows() != diversity.cols()) {
    throw DimensionError("diversity_gain_correlation: matrix shapes differ");
  }
  DiversityGainCorrelation out;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < diversity.rows(); ++i) {
    for (std::size_t j = i + 1; j < diversity.cols(); ++j) {
      out.points.push_back({i, j, diversity(i, j), gain(i, j)});
      xs.push_back(diversity(i, j));
      ys.push_back(gain(i, j));
    }
  }
  out.spearman = spearman_correlation(xs, ys);
  out.pearson = pearson_correlation(xs, ys);
  return out;
}

DiversityGainCorrelation diversity_gain_correlation(std::span<const PredictionMatrix> members,
                                                    const LabelSet& labels, std::size_t k) {
  if (members.size() < 3) throw std::invalid_argument("diversity_gain_correlation: need >= 3 members");
  // Identical members make every pair degenerate; diversity is then 0 by definition.
  const bool all_same = std::all_of(members.begin(), members.end(),
                                    [&](const PredictionMatrix& m) { return m == members.front(); });
  if (all_same) {
    const std::size_t m = members.size();
    return diversity_gain_from_matrices(MatrixD(m, m, 0.0), MatrixD(m, m, 0.0));
  }
  return diversity_gain_from_matrices(diversity_matrix(members), pair_gain_matrix(members, labels, k));
}

WrongSet::WrongSet(double theta, std::size_t num_videos, std::size_t num_classes,
                   std::vector<std::uint64_t> sorted_keys)
    : theta_(theta), num_videos_(num_videos), num_classes_(num_classes), keys_(std::move(sorted_keys)) {
  if (!std::is_sorted(keys_.begin(), keys_.end()) ||
      std::adjacent_find(keys_.begin(), keys_.end()) != keys_.end()) {
    throw std::invalid_argument("wrong set keys must be sorted and unique");
  }
  if (!keys_.empty() && keys_.back() >= num_videos_ * num_classes_) {
    throw std::invalid_argument("wrong set key out of range");
  }
}

bool WrongSet::contains(std::size_t video, ClassId cls) const {
  return std::binary_search(keys_.begin(), keys_.end(), key(video, cls));
}

bool WrongSet::is_subset_of(const WrongSet& other) const {
  return std::includes(other.keys_.begin(), other.keys_.end(), keys_.begin(), keys_.end());
}

WrongSet WrongSet::intersect(const WrongSet& other) const {
  if (other.num_videos_ != num_videos_ || other.num_classes_ != num_classes_) {
    throw DimensionError("wrong set shapes differ");
  }
  std::vector<std::uint64_t> out;
  std::set_intersection(keys_.begin(), keys_.end(), other.keys_.begin(), other.keys_.end(),
                        std::back_inserter(out));
  return WrongSet(theta_, num_videos_, num_classes_, std::move(out));
}

WrongSet WrongSet::unite(const WrongSet& other) const {
  if (other.num_videos_ != num_videos_ || other.num_classes_ != num_classes_) {
    throw DimensionError("wrong set shapes differ");
  }
  std::vector<std::uint64_t> out;
  std::set_union(keys_.begin(), keys_.end(), other.keys_.begin(), other.keys_.end(),
                 std::back_inserter(out));
  return WrongSet(theta_, num_videos_, num_classes_, std::move(out));
}

WrongSet wrong_set(const PredictionMatrix& pred, const LabelSet& labels, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("wrong_set: theta must be in (0, 1)");
  require_aligned(pred, labels);
  const std::size_t classes = pred.num_classes();
  std::vector<std::uint64_t> keys;
  for (std::size_t v = 0; v < pred.num_videos(); ++v) {
    const auto row = pred.row(v);
    const auto pos = labels.positives(v);
    std::size_t next = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = row[c];
      const bool positive = next < pos.size() && pos[next] == c;
      if (positive) ++next;
      const double error = positive ? 1.0 - p : p;
      if (error >= theta) keys.push_back(static_cast<std::uint64_t>(v) * classes + c);
    }
  }
  return WrongSet(theta, pred.num_videos(), classes, std::move(keys));
}

Trajectory wrongset_trajectory(std::span<const PredictionMatrix> members, const LabelSet& labels,
                               double theta) {
  if (members.empty()) throw std::invalid_argument("wrongset_trajectory: need >= 1 member");
  Trajectory t;
  std::optional<WrongSet> inter, uni;
  for (std::size_t m = 0; m < members.size(); ++m) {
    const WrongSet w = wrong_set(members[m], labels, theta);
    if (m == 0) {
      inter = w;
      uni = w;
    } else {
      inter = inter->intersect(w);
      uni = uni->unite(w);
    }
    t.steps.push_back({m + 1, inter->size(), uni->size()});
  }
  return t;
}

ErrorHistogramShift error_histogram_shift(const Ensemble& base, const Ensemble& extended,
                                          const LabelSet& labels, double theta, std::size_t bins) {
  if (!extended.contains_all(base)) {
    throw std::invalid_argument("error_histogram_shift: extended ensemble does not contain base");
  }
  return error_histogram_shift(base.combined(), extended.combined(), labels, theta, bins);
}

ErrorHistogramShift error_histogram_shift(const PredictionMatrix& before, const PredictionMatrix& after,
                                          const LabelSet& labels, double theta, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("error_histogram_shift: bins must be >= 1");
  require_aligned(after, labels);
  const WrongSet tracked = wrong_set(before, labels, theta);

  ErrorHistogramShift out;
  out.bins = bins;
  out.tracked_pairs = tracked.size();
  for (auto* h : {&out.base_hist, &out.extended_hist, &out.base_hist_positive,
                  &out.extended_hist_positive, &out.base_hist_negative, &out.extended_hist_negative}) {
    h->assign(bins, 0);
  }
  auto bin_of = [bins](double e) {
    const auto b = static_cast<std::size_t>(std::floor(std::clamp(e, 0.0, 1.0) * static_cast<double>(bins)));
    return std::min(b, bins - 1);
  };
  double sum_before = 0.0, sum_after = 0.0;
  for (std::uint64_t key : tracked.keys()) {
    const std::size_t v = tracked.video_of(key);
    const ClassId c = tracked.class_of(key);
    const bool positive = labels.is_positive(v, c);
    const double e0 = positive ? 1.0 - before(v, c) : before(v, c);
    const double e1 = positive ? 1.0 - after(v, c) : after(v, c);
    sum_before += e0;
    sum_after += e1;
    ++out.base_hist[bin_of(e0)];
    ++out.extended_hist[bin_of(e1)];
    auto& hb = positive ? out.base_hist_positive : out.base_hist_negative;
    auto& he = positive ? out.extended_hist_positive : out.extended_hist_negative;
    ++hb[bin_of(e0)];
    ++he[bin_of(e1)];
  }
  if (!tracked.empty()) {
    out.base_mean_error = sum_before / static_cast<double>(tracked.size());
    out.extended_mean_error = sum_after / static_cast<double>(tracked.size());
  }
  return out;
}

}  // namespace divens
