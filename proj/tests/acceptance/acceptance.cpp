// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion ids as
// arguments to run a subset.

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "divens/diversity.hpp"
#include "divens/ensemble.hpp"
#include "divens/metrics.hpp"
#include "divens/mlp.hpp"
#include "divens/parallel.hpp"
#include "divens/pooling.hpp"
#include "divens/synth.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace divens;

namespace {

// Tolerances and budgets.
constexpr double kGapOracleTol = 1e-9;
constexpr double kGapOracleBudgetSec = 5.0;
constexpr double kGapPerfBudgetSec = 60.0;
constexpr double kGapPerfMemoryBytes = 2.5e9;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradStep = 1e-3;
constexpr double kGradFloor = 1e-8;
constexpr double kGradBudgetSec = 30.0;
constexpr double kEnsembleBestSlack = 0.001;
constexpr double kEnsembleBudgetSec = 600.0;
constexpr double kSpearmanMin = 0.3;
constexpr double kOverfitMinFraction = 0.6;
constexpr double kFlatCurveTol = 1e-12;
constexpr double kPoolTol = 1e-6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixed(double x, int digits = 4) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << x;
  return ss.str();
}

std::string sci(double x) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << x;
  return ss.str();
}

NetworkConfig desk_net(std::uint64_t seed, double dropout = 0.0, std::size_t hidden = 64,
                       std::size_t epochs = 20) {
  NetworkConfig c;
  c.input_dim = 64;
  c.num_classes = 50;
  c.hidden_sizes = {hidden, hidden, hidden};
  c.dropout = dropout;
  c.learning_rate = 1e-3;
  c.max_epochs = epochs;
  c.checkpoint_stride = epochs;
  c.seed = seed;
  return c;
}

PredictionMatrix fit_predict(const NetworkConfig& c, const testing::TrainVal& data) {
  return predict(train(c, data.train, data.val).network, data.val.features);
}

testing::TrainVal desk_data(std::uint64_t seed) {
  SynthConfig s;
  s.seed = seed;
  return testing::pooled_synth(s);
}

Outcome gap_oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::uniform_int_distribution<std::size_t> vd(1, 20), cd(1, 10);
    const std::size_t v = vd(rng), c = cd(rng);
    auto p = testing::random_predictions(v, c, rng);
    // Coarse values on some instances to exercise ties.
    if (i % 3 == 0) {
      for (float& x : p.values()) x = std::round(x * 4.0f) / 4.0f;
    }
    const auto labels = testing::random_labels(v, c, 4, rng);
    const double got = gap_at_k(p, labels, 5);
    worst = std::max(worst, std::abs(got - gap_oracle(p, labels, 5)));
    worst = std::max(worst, std::abs(got - oracle::gap_by_counting(p, labels, 5)));
  }
  const double sec = seconds_since(t0);
  return {worst <= kGapOracleTol && sec < kGapOracleBudgetSec,
          "200 instances, max |diff| " + sci(worst) + ", " + fixed(sec, 2) + " s"};
}

double peak_rss_bytes() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return static_cast<double>(u.ru_maxrss) * 1024.0;
}

Outcome gap_performance() {
  constexpr std::size_t V = 100000, C = 4716;
  set_worker_count(1);
  std::mt19937_64 rng(7);
  PredictionMatrix p(V, C);
  auto values = p.values();
  for (std::size_t i = 0; i + 1 < values.size(); i += 2) {
    const std::uint64_t bits = rng();
    values[i] = static_cast<float>(bits >> 40) * 0x1.0p-24f;
    values[i + 1] = static_cast<float>((bits >> 8) & 0xFFFFFF) * 0x1.0p-24f;
  }
  const auto labels = testing::random_labels(V, C, 5, rng);
  const auto t0 = Clock::now();
  const double g = gap_at_k(p, labels, 20);
  const double sec = seconds_since(t0);
  set_worker_count(0);
  const double rss = peak_rss_bytes();
  return {sec < kGapPerfBudgetSec && rss < kGapPerfMemoryBytes,
          "GAP " + sci(g) + " in " + fixed(sec, 2) + " s single-threaded, peak RSS " + fixed(rss / 1e9, 2) +
              " GB"};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t params = 0, reduced = 0, nondiff = 0;
  for (double lambda : {0.0, 0.3}) {
    for (std::uint64_t b = 0; b < 3; ++b) {
      std::mt19937_64 rng(1000 + b);
      NetworkConfig c;
      c.input_dim = 5;
      c.hidden_sizes = {8, 8, 8};
      c.num_classes = 4;
      c.seed = 500 + b;
      auto net = init_network<double>(c);
      std::normal_distribution<double> g;
      for (auto& l : net.layers) {
        for (double& x : l.bias) x = 0.1 * g(rng);
      }
      MatrixD x(8, 5), y(8, 4), q(8, 4);
      for (double& v : x.values()) v = g(rng);
      std::uniform_real_distribution<double> u(0.05, 0.95);
      for (double& v : y.values()) v = u(rng) < 0.4 ? 1.0 : 0.0;
      for (double& v : q.values()) v = u(rng);
      const auto r = oracle::finite_difference_check(net, x, y, &q, lambda, 0, kGradStep, kGradFloor);
      worst = std::max(worst, r.max_rel_error);
      params += r.parameters;
      reduced += r.reduced_steps;
      nondiff += r.nondifferentiable;
    }
  }
  const double sec = seconds_since(t0);
  return {worst < kGradRelTol && nondiff == 0 && sec < kGradBudgetSec,
          std::to_string(params) + " parameter checks, max rel error " + sci(worst) + ", " +
              std::to_string(reduced) + " re-probed near ReLU kinks, " + std::to_string(nondiff) +
              " on a kink, " + fixed(sec, 2) + " s"};
}

Outcome ensemble_gain() {
  const auto t0 = Clock::now();
  int wins = 0;
  std::string detail;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto data = desk_data(s);
    std::vector<PredictionMatrix> members;
    double mean = 0.0, best = 0.0;
    for (std::uint64_t m = 0; m < 5; ++m) {
      members.push_back(fit_predict(desk_net(100 * s + m), data));
      const double g = gap_at_k(members.back(), data.val.labels);
      mean += g / 5.0;
      best = std::max(best, g);
    }
    const double e = gap_at_k(average(members), data.val.labels);
    const bool ok = e > mean && e >= best - kEnsembleBestSlack;
    wins += ok;
    detail += " [seed " + std::to_string(s) + ": ens " + fixed(e) + " mean " + fixed(mean) + " best " + fixed(best) +
              "]";
  }
  const double sec = seconds_since(t0);
  return {wins >= 4 && sec < kEnsembleBudgetSec,
          std::to_string(wins) + "/5 seeds," + detail + ", " + fixed(sec, 1) + " s"};
}

Outcome diversity_gain_correlation_check() {
  const auto data = desk_data(11);
  std::vector<PredictionMatrix> members;
  std::uint64_t seed = 1;
  for (double dropout : {0.0, 0.3, 0.5}) {
    for (std::size_t hidden : {32, 64}) {
      for (int rep = 0; rep < 2; ++rep) members.push_back(fit_predict(desk_net(seed++, dropout, hidden), data));
    }
  }
  const auto r = diversity_gain_correlation(members, data.val.labels);
  const bool ok = r.spearman && *r.spearman > kSpearmanMin;
  return {ok, std::to_string(members.size()) + " members, " + std::to_string(r.points.size()) +
                  " pairs, spearman " + (r.spearman ? fixed(*r.spearman) : "undefined") + ", pearson " +
                  (r.pearson ? fixed(*r.pearson) : "undefined")};
}

Outcome overfit_study() {
  constexpr std::size_t kRepeats = 10, kMembers = 5, kFactor = 3, kEpochs = 75;
  int higher = 0;
  std::size_t capped = 0;
  double gain_peak = 0.0, gain_final = 0.0, div_peak = 0.0, div_final = 0.0;
  for (std::uint64_t r = 0; r < kRepeats; ++r) {
    const auto data = desk_data(200 + r);
    std::vector<CheckpointPair> pairs;
    for (std::uint64_t m = 0; m < kMembers; ++m) {
      auto c = desk_net(1000 * r + m, 0.0, 64, kEpochs);
      c.checkpoint_stride = 1;
      const auto run = train(c, data.train, data.val);
      pairs.push_back(checkpoint_pair(run.history, data.val.features, kFactor));
      if (pairs.back().overfit_epoch < kFactor * pairs.back().peak_epoch) ++capped;
    }
    const auto rep = checkpoint_study(pairs, data.val.labels);
    higher += rep.diversity_final > rep.diversity_peak;
    gain_peak += rep.gap_gain_peak / kRepeats;
    gain_final += rep.gap_gain_final / kRepeats;
    div_peak += rep.diversity_peak / kRepeats;
    div_final += rep.diversity_final / kRepeats;
  }
  const double frac = static_cast<double>(higher) / kRepeats;
  return {frac >= kOverfitMinFraction,
          std::to_string(higher) + "/" + std::to_string(kRepeats) + " repeats more diverse when overfitted; mean " +
              "diversity peak " + fixed(div_peak) + " overfit " + fixed(div_final) + "; mean GAP gain peak " +
              fixed(gain_peak) + " overfit " + fixed(gain_final) + "; " + std::to_string(capped) +
              " members capped at the last epoch"};
}

Outcome wrong_set_laws() {
  std::mt19937_64 rng(77);
  std::size_t violations = 0, steps = 0;
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<std::size_t> vd(5, 40), cd(2, 15), md(1, 12);
    const std::size_t v = vd(rng), c = cd(rng), m = md(rng);
    const auto labels = testing::random_labels(v, c, 3, rng);
    std::vector<PredictionMatrix> ms;
    for (std::size_t i = 0; i < m; ++i) {
      auto p = testing::random_predictions(v, c, rng);
      for (float& x : p.values()) x = x < 0.5f ? x * x : 1.0f - (1.0f - x) * (1.0f - x);
      ms.push_back(std::move(p));
    }
    std::uniform_real_distribution<double> ud(0.5, 0.99);
    const double theta = ud(rng);
    const auto traj = wrongset_trajectory(ms, labels, theta);
    if (traj.steps.size() != m) ++violations;
    for (std::size_t i = 1; i < traj.steps.size(); ++i) {
      ++steps;
      if (traj.steps[i].intersection_size > traj.steps[i - 1].intersection_size) ++violations;
      if (traj.steps[i].union_size < traj.steps[i - 1].union_size) ++violations;
    }
    std::vector<WrongSet> sets;
    for (const auto& p : ms) sets.push_back(wrong_set(p, labels, theta));
    WrongSet inter = sets[0], uni = sets[0];
    for (const auto& s : sets) {
      inter = inter.intersect(s);
      uni = uni.unite(s);
    }
    if (inter.size() != traj.steps.back().intersection_size || uni.size() != traj.steps.back().union_size) {
      ++violations;
    }
    for (const auto& s : sets) {
      if (!inter.is_subset_of(s) || !s.is_subset_of(uni)) ++violations;
    }
    const double higher = theta + (1.0 - theta) * 0.5;
    for (const auto& p : ms) {
      if (!wrong_set(p, labels, higher).is_subset_of(wrong_set(p, labels, theta))) ++violations;
    }
  }
  return {violations == 0, "100 sequences, " + std::to_string(steps) + " steps, " + std::to_string(violations) +
                               " violations"};
}

Outcome alpha_sweep_shape() {
  // A common validation set; each ensemble trains on its own random half of the rest.
  SynthConfig s;
  s.seed = 31;
  const auto data = generate(s);
  const MatrixF features = pool_features(data.videos, PoolMethod::kMean);
  const auto& val_idx = data.split.validation;
  const Dataset val{features.select_rows(val_idx), data.labels.select_rows(val_idx)};
  std::vector<PredictionMatrix> ensembles;
  for (std::uint64_t e = 0; e < 2; ++e) {
    const auto half = make_split(data.split.train.size(), 0.5, 40 + e);
    std::vector<std::size_t> rows;
    for (std::size_t i : half.train) rows.push_back(data.split.train[i]);
    const Dataset tr{features.select_rows(rows), data.labels.select_rows(rows)};
    std::vector<PredictionMatrix> members;
    for (std::uint64_t m = 0; m < 5; ++m) {
      members.push_back(predict(train(desk_net(10 * e + m), tr, val).network, val.features));
    }
    ensembles.push_back(average(members));
  }
  const auto r = alpha_sweep(ensembles[0], ensembles[1], val.labels);
  const double end_a = r.grid.back().gap, end_b = r.grid.front().gap;
  const bool interior = r.best_alpha > 0.0 && r.best_alpha < 1.0 && r.best_gap >= std::max(end_a, end_b);
  const auto flat = alpha_sweep(ensembles[0], ensembles[0], val.labels);
  double spread = 0.0;
  for (const auto& pt : flat.grid) spread = std::max(spread, std::abs(pt.gap - flat.grid.front().gap));
  return {interior && spread <= kFlatCurveTol,
          "best alpha " + fixed(r.best_alpha, 2) + " GAP " + fixed(r.best_gap) + " vs endpoints " + fixed(end_b) +
              " (alpha 0) and " + fixed(end_a) + " (alpha 1); identical inputs spread " + sci(spread)};
}

Outcome pooling_invariants() {
  std::size_t failures = 0;
  auto fail_if = [&](bool bad) { failures += bad; };
  auto norm = [](std::span<const float> x) {
    double s = 0.0;
    for (float v : x) s += static_cast<double>(v) * v;
    return std::sqrt(s);
  };
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> td(1, 60), dd(1, 12);
    const std::size_t T = td(rng), d = dd(rng);

    // Constant sequence.
    std::vector<float> v(d);
    std::normal_distribution<float> g;
    for (float& x : v) x = g(rng);
    MatrixF cm(T, d);
    for (std::size_t t = 0; t < T; ++t) std::copy(v.begin(), v.end(), cm.row(t).begin());
    const FrameSequence constant("c", cm);
    const auto mp = mean_pool(constant);
    for (std::size_t j = 0; j < d; ++j) fail_if(std::abs(mp[j] - v[j]) > kPoolTol * (1.0 + std::abs(v[j])));
    const auto cms = mean_std_pool(constant);
    for (std::size_t j = 0; j < d; ++j) fail_if(cms[d + j] != 0.0f);

    // Norms.
    const auto seq = testing::random_sequence(T, d, rng);
    const auto ms = mean_std_pool(seq);
    const double n = norm(std::span(ms).subspan(d));
    fail_if(!(std::abs(n) <= kPoolTol || std::abs(n - 1.0) <= kPoolTol));

    std::vector<FrameSequence> corpus;
    for (int i = 0; i < 8; ++i) corpus.push_back(testing::random_sequence(td(rng), d, rng));
    MatrixD regions(0, d);
    std::vector<double> stacked;
    for (const auto& s : corpus) {
      const auto r = roi_region_vectors(s);
      stacked.insert(stacked.end(), r.values().begin(), r.values().end());
    }
    const MatrixD all(stacked.size() / d, d, stacked);
    const auto model = fit_pca_whitening(all);
    const auto roi = roi_pool(seq, model);
    const double rn = norm(roi);
    fail_if(!(rn == 0.0 || std::abs(rn - 1.0) <= kPoolTol));

    // BoW simplex and length invariance.
    const auto frames = stack_frames(corpus);
    const std::size_t k = std::min<std::size_t>(1 + seed % 8, frames.rows());
    const auto km = kmeans_fit(frames, k, seed);
    const auto km2 = kmeans_fit(frames, k, seed);
    fail_if(!(km.codebook.centroids() == km2.codebook.centroids()) || km.inertia != km2.inertia ||
            km.assignment != km2.assignment);
    for (std::size_t i = 1; i < km.inertia.size(); ++i) fail_if(km.inertia[i] > km.inertia[i - 1]);
    const auto bow = bow_pool(seq, km.codebook);
    double sum = 0.0;
    for (float x : bow) {
      fail_if(x < 0.0f);
      sum += x;
    }
    fail_if(std::abs(sum - 1.0) > kPoolTol);
    MatrixF twice(2 * T, d);
    for (std::size_t t = 0; t < T; ++t) {
      std::copy(seq.frame(t).begin(), seq.frame(t).end(), twice.row(2 * t).begin());
      std::copy(seq.frame(t).begin(), seq.frame(t).end(), twice.row(2 * t + 1).begin());
    }
    const auto bow2 = bow_pool(FrameSequence("t", twice), km.codebook);
    for (std::size_t j = 0; j < bow.size(); ++j) fail_if(std::abs(bow[j] - bow2[j]) > kPoolTol);
  }
  return {failures == 0, "100 seeds, " + std::to_string(failures) + " failures"};
}

Outcome sequential_build() {
  const auto data = desk_data(41);
  const auto base = desk_net(300);
  const auto diverse = sequential_diverse_build(data.train, data.val, base, 4, 0.3);
  const auto control = sequential_diverse_build(data.train, data.val, base, 4, 0.0);
  const auto dm = predictions_of(diverse.ensemble.members());
  const auto cm = predictions_of(control.ensemble.members());
  const double dd = mean_pairwise_diversity(dm), dc = mean_pairwise_diversity(cm);
  const double gd = gap_at_k(diverse.ensemble.combined(), data.val.labels);
  const double gc = gap_at_k(control.ensemble.combined(), data.val.labels);
  return {dd > dc, "mean pairwise diversity lambda 0.3: " + fixed(dd) + " vs lambda 0: " + fixed(dc) +
                       "; ensemble GAP lambda 0.3: " + fixed(gd) + " vs random-init average: " + fixed(gc)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "GAP oracle equivalence", gap_oracle_equivalence},
      {2, "GAP performance", gap_performance},
      {3, "gradient check", gradient_check},
      {4, "ensemble gain direction", ensemble_gain},
      {5, "diversity-gain correlation", diversity_gain_correlation_check},
      {6, "overfit study direction", overfit_study},
      {7, "wrong-set laws", wrong_set_laws},
      {8, "alpha-sweep shape", alpha_sweep_shape},
      {9, "pooling invariants", pooling_invariants},
      {10, "sequential diversity-aware build", sequential_build},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
              << " [" << fixed(seconds_since(t0), 1) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
