#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace divens::oracle {

double gap_by_counting(const PredictionMatrix& preds, const LabelSet& labels, std::size_t k) {
  struct Item {
    float conf;
    bool rel;
  };
  std::vector<Item> items;
  std::size_t denom = 0;
  for (std::size_t v = 0; v < preds.num_videos(); ++v) {
    const auto row = preds.row(v);
    // Class c survives when fewer than k classes rank ahead of it.
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::size_t ahead = 0;
      for (std::size_t o = 0; o < row.size(); ++o) {
        if (row[o] > row[c] || (row[o] == row[c] && o < c)) ++ahead;
      }
      if (ahead < k) items.push_back({row[c], labels.is_positive(v, static_cast<ClassId>(c))});
    }
    denom += std::min(labels.positives(v).size(), k);
  }
  auto ahead_of = [](const Item& a, const Item& b) {
    return a.conf > b.conf || (a.conf == b.conf && a.rel && !b.rel);
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].rel) continue;
    // 1-based position and hits up to and including i, with equal items
    // ordered by index.
    std::size_t position = 1, hits = 1;
    for (std::size_t j = 0; j < items.size(); ++j) {
      if (j == i) continue;
      const bool equal = items[j].conf == items[i].conf && items[j].rel == items[i].rel;
      if (ahead_of(items[j], items[i]) || (equal && j < i)) {
        ++position;
        if (items[j].rel) ++hits;
      }
    }
    sum += static_cast<double>(hits) / static_cast<double>(position);
  }
  return sum / static_cast<double>(denom);
}

std::vector<double> compensated_mean(const FrameSequence& seq) {
  std::vector<double> out(seq.dim());
  for (std::size_t j = 0; j < seq.dim(); ++j) {
    double s = 0.0, c = 0.0;
    for (std::size_t t = 0; t < seq.num_frames(); ++t) {
      const double y = static_cast<double>(seq.frame(t)[j]) - c;
      const double u = s + y;
      c = (u - s) - y;
      s = u;
    }
    out[j] = s / static_cast<double>(seq.num_frames());
  }
  return out;
}

namespace {

double norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> roi_pool_scripted(const FrameSequence& seq, const PcaWhitenModel& model) {
  const std::size_t T = seq.num_frames();
  const std::size_t d = seq.dim();
  std::vector<double> total(d, 0.0);
  for (int s = 1; s <= 4; ++s) {
    int w = static_cast<int>(std::ceil(2.0 * static_cast<double>(T) / (s + 1.0)));
    w = std::max(1, std::min(w, static_cast<int>(T)));
    for (int i = 0; i < s; ++i) {
      int start = 0;
      if (s > 1) start = static_cast<int>(std::floor(double(i) * double(int(T) - w) / double(s - 1)));
      std::vector<double> r(d);
      for (std::size_t j = 0; j < d; ++j) {
        double m = seq.frame(start)[j];
        for (int t = start + 1; t < start + w; ++t) m = std::max(m, double(seq.frame(t)[j]));
        r[j] = m;
      }
      const double n = norm(r);
      if (n == 0.0) continue;
      for (double& x : r) x /= n;
      for (std::size_t c = 0; c < d; ++c) {
        double proj = 0.0;
        for (std::size_t j = 0; j < d; ++j) proj += model.basis()(j, c) * (r[j] - model.mean()[j]);
        total[c] += model.scale()[c] * proj;
      }
    }
  }
  const double n = norm(total);
  if (n > 0.0) {
    for (double& x : total) x /= n;
  }
  return total;
}

long double pearson_reference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("pearson_reference: bad sizes");
  long double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double x = a[i], y = b[i];
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
    sab += x * y;
  }
  const long double n = static_cast<long double>(a.size());
  const long double cov = sab / n - (sa / n) * (sb / n);
  const long double va = saa / n - (sa / n) * (sa / n);
  const long double vb = sbb / n - (sb / n) * (sb / n);
  return cov / std::sqrt(va * vb);
}

}  // namespace divens::oracle

namespace divens::oracle {

GradCheckResult finite_difference_check(const NetworkD& net, const MatrixD& batch,
                                        const MatrixD& labels, const MatrixD* ensemble,
                                        double lambda, std::uint64_t mask_seed, double h,
                                        double floor) {
  const auto pass = forward(net, batch, Mode::kTrain, mask_seed);
  const LossSpec<double> spec{lambda, ensemble};
  const Gradients analytic = backward(net, pass, labels, spec);

  NetworkD probe = net;
  auto pattern = [](const ForwardPass<double>& p) {
    std::vector<bool> on;
    for (const auto& z : p.pre_activations) {
      for (double v : z.values()) on.push_back(v > 0.0);
    }
    return on;
  };
  const auto base = pattern(pass);
  auto probe_at = [&](bool& crossed) {
    const auto p = forward_with_masks(probe, batch, pass.masks);
    if (pattern(p) != base) crossed = true;
    return evaluate_loss(p.output, labels, spec);
  };
  GradCheckResult out;
  auto visit = [&](double& param, double a, std::size_t layer, std::size_t index, bool bias) {
    const double saved = param;
    double step = h, numeric = 0.0;
    bool crossed = true;
    for (int attempt = 0; crossed && attempt < 5; ++attempt, step /= 10.0) {
      if (attempt == 1) ++out.reduced_steps;
      crossed = false;
      param = saved + step;
      const double up = probe_at(crossed);
      param = saved - step;
      const double down = probe_at(crossed);
      param = saved;
      numeric = (up - down) / (2.0 * step);
    }
    ++out.parameters;
    if (crossed) {
      ++out.nondifferentiable;
      return;
    }
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_layer = layer;
      out.worst_index = index;
      out.worst_is_bias = bias;
    }
  };
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    auto w = probe.layers[l].weights.values();
    for (std::size_t i = 0; i < w.size(); ++i) visit(w[i], analytic.weights[l].values()[i], l, i, false);
    auto& b = probe.layers[l].bias;
    for (std::size_t i = 0; i < b.size(); ++i) visit(b[i], analytic.biases[l][i], l, i, true);
  }
  return out;
}

}  // namespace divens::oracle
