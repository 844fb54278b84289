#include <doctest.h>

#include <algorithm>
#include <random>

#include "divens/diversity.hpp"
#include "divens/ensemble.hpp"
#include "helpers.hpp"

using namespace divens;
using testing::random_labels;
using testing::random_predictions;

namespace {

ClassifierRecord record(std::string id, PredictionMatrix p) {
  ClassifierRecord r{std::move(id), FeatureTag::kMean, {64, 64, 64}, 0.0, CheckpointTag::final_epoch(),
                     std::move(p)};
  return r;
}

PredictionMatrix complement(const PredictionMatrix& p) {
  PredictionMatrix out = p;
  for (float& x : out.values()) x = 1.0f - x;
  return out;
}

}  // namespace

TEST_CASE("average examples") {
  std::mt19937_64 rng(1);
  const auto p = random_predictions(6, 5, rng);
  CHECK(average(std::vector{p}) == p);
  const auto half = average(std::vector{PredictionMatrix(3, 4, 0.2f), PredictionMatrix(3, 4, 0.8f)});
  for (float x : half.values()) CHECK(x == doctest::Approx(0.5f).epsilon(1e-6));

  const auto q = random_predictions(6, 5, rng), r = random_predictions(6, 5, rng);
  const auto one = average(std::vector{p, q, r});
  const auto two = average(std::vector{r, p, q});
  for (std::size_t i = 0; i < one.values().size(); ++i) {
    CHECK(one.values()[i] == doctest::Approx(two.values()[i]).epsilon(1e-6));
  }
  CHECK_THROWS_AS(average(std::vector{p, PredictionMatrix(6, 4)}), DimensionError);
  CHECK_THROWS(average(std::vector<PredictionMatrix>{}));
}

TEST_CASE("average stays within the member range") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    std::vector<PredictionMatrix> ms;
    for (int m = 0; m < 1 + t % 6; ++m) ms.push_back(random_predictions(4, 7, rng));
    const auto avg = average(ms);
    for (std::size_t i = 0; i < avg.values().size(); ++i) {
      float lo = 1.0f, hi = 0.0f;
      for (const auto& m : ms) {
        lo = std::min(lo, m.values()[i]);
        hi = std::max(hi, m.values()[i]);
      }
      CHECK(avg.values()[i] >= lo);
      CHECK(avg.values()[i] <= hi);
    }
  }
}

TEST_CASE("adding the current mean leaves the average unchanged") {
  std::mt19937_64 rng(3);
  std::vector<PredictionMatrix> ms{random_predictions(5, 5, rng), random_predictions(5, 5, rng),
                                   random_predictions(5, 5, rng)};
  const auto avg = average(ms);
  ms.push_back(avg);
  const auto again = average(ms);
  for (std::size_t i = 0; i < avg.values().size(); ++i) {
    CHECK(std::abs(again.values()[i] - avg.values()[i]) <= 1e-6);
  }
}

TEST_CASE("weighted_combine") {
  std::mt19937_64 rng(4);
  const auto a = random_predictions(5, 6, rng), b = random_predictions(5, 6, rng);
  CHECK(weighted_combine(a, b, 1.0) == a);
  CHECK(weighted_combine(a, b, 0.0) == b);
  for (double alpha : {0.1, 0.35, 0.8}) {
    const auto same = weighted_combine(a, a, alpha);
    for (std::size_t i = 0; i < a.values().size(); ++i) {
      CHECK(same.values()[i] == doctest::Approx(a.values()[i]).epsilon(1e-6));
    }
    const auto x = weighted_combine(a, b, alpha), y = weighted_combine(a, b, 1.0 - alpha);
    for (std::size_t i = 0; i < a.values().size(); ++i) {
      CHECK(std::abs(x.values()[i] + y.values()[i] - a.values()[i] - b.values()[i]) <= 1e-6);
    }
  }
  const auto mix = weighted_combine(PredictionMatrix(1, 1, 0.6f), PredictionMatrix(1, 1, 0.2f), 0.65);
  CHECK(mix(0, 0) == doctest::Approx(0.46).epsilon(1e-6));
  CHECK_THROWS_AS(weighted_combine(a, PredictionMatrix(5, 5), 0.5), DimensionError);
  CHECK_THROWS(weighted_combine(a, b, 1.2));
}

TEST_CASE("Ensemble combines eagerly and tracks members") {
  std::mt19937_64 rng(5);
  const auto p = random_predictions(4, 3, rng), q = random_predictions(4, 3, rng);
  const Ensemble e({record("a", p), record("b", q)});
  CHECK(e.size() == 2);
  CHECK(e.combined() == average(std::vector{p, q}));
  const Ensemble bigger = e.with_member(record("c", random_predictions(4, 3, rng)));
  CHECK(bigger.size() == 3);
  CHECK(e.size() == 2);
  CHECK(bigger.contains_all(e));
  CHECK_FALSE(e.contains_all(bigger));
  const Ensemble renamed({record("a", p), record("z", q)});
  CHECK_FALSE(bigger.contains_all(renamed));
  CHECK_THROWS(Ensemble({}));
  CHECK_THROWS_AS(Ensemble({record("a", p), record("b", PredictionMatrix(4, 2))}), DimensionError);
}

TEST_CASE("alpha_sweep examples") {
  std::mt19937_64 rng(6);
  const auto labels = random_labels(30, 8, 3, rng);
  const auto a = random_predictions(30, 8, rng);

  SUBCASE("identical inputs give a flat curve") {
    const auto r = alpha_sweep(a, a, labels);
    CHECK(r.grid.size() == 21);
    for (const auto& pt : r.grid) CHECK(std::abs(pt.gap - r.grid.front().gap) <= 1e-12);
    CHECK(r.best_alpha == 0.0);
  }
  SUBCASE("dominant member") {
    // Every alpha above one half ranks perfectly; the tie rule picks the smallest.
    std::mt19937_64 r2(9);
    const auto wide = random_labels(30, 30, 3, r2);
    const auto exact = testing::exact_predictions(wide);
    const auto r = alpha_sweep(exact, complement(exact), wide);
    CHECK(r.grid.back().gap == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.best_gap == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.best_alpha == doctest::Approx(0.55));
    for (const auto& pt : r.grid) {
      if (pt.alpha <= 0.5 + 1e-9) CHECK(pt.gap < 1.0);
    }
  }
  SUBCASE("endpoints and best point") {
    const auto b = random_predictions(30, 8, rng);
    const auto r = alpha_sweep(a, b, labels, 0.1, 5);
    CHECK(r.grid.size() == 11);
    CHECK(r.grid.front().alpha == 0.0);
    CHECK(r.grid.back().alpha == 1.0);
    CHECK(r.grid.front().gap == gap_at_k(b, labels, 5));
    CHECK(r.grid.back().gap == gap_at_k(a, labels, 5));
    for (const auto& pt : r.grid) {
      CHECK(r.best_gap >= pt.gap);
      if (pt.gap == r.best_gap) CHECK(r.best_alpha <= pt.alpha);
    }
  }
  SUBCASE("uneven step still ends at one") {
    const auto r = alpha_sweep(a, a, labels, 0.3);
    CHECK(r.grid.size() == 5);
    CHECK(r.grid.back().alpha == 1.0);
  }
  SUBCASE("bad step") {
    CHECK_THROWS(alpha_sweep(a, a, labels, 0.0));
    CHECK_THROWS(alpha_sweep(a, a, labels, 0.6));
  }
}

namespace {

SynthConfig small_synth(std::uint64_t seed) {
  SynthConfig c;
  c.num_videos = 1200;
  c.seed = seed;
  return c;
}

NetworkConfig quick_net(std::uint64_t seed, std::size_t epochs) {
  NetworkConfig c;
  c.input_dim = 64;
  c.num_classes = 50;
  c.learning_rate = 1e-3;
  c.max_epochs = epochs;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("sequential build of size one is a plain run") {
  const auto data = testing::pooled_synth(small_synth(1));
  const auto config = quick_net(7, 4);
  const auto seq = sequential_diverse_build(data.train, data.val, config, 1);
  const auto plain = train(config, data.train, data.val);
  REQUIRE(seq.runs.size() == 1);
  CHECK(seq.runs[0].network == plain.network);
  CHECK(seq.ensemble.combined() == predict(plain.network, data.val.features));
  CHECK(seq.train_output == predict_matrix(plain.network, data.train.features));
  CHECK_THROWS(sequential_diverse_build(data.train, data.val, config, 0));
}

TEST_CASE("diversity-aware members are more diverse than plain clones") {
  const auto data = testing::pooled_synth(small_synth(2));
  const auto config = quick_net(11, 15);
  const auto diverse = sequential_diverse_build(data.train, data.val, config, 4, 0.3);
  const auto clones = sequential_diverse_build(data.train, data.val, config, 4, 0.0);
  const auto d = predictions_of(diverse.ensemble.members());
  const auto c = predictions_of(clones.ensemble.members());
  CHECK(d[0] == c[0]);
  auto to_first = [](const std::vector<PredictionMatrix>& ms) {
    double s = 0.0;
    for (std::size_t i = 1; i < ms.size(); ++i) s += pearson_diversity(ms[0], ms[i]);
    return s / static_cast<double>(ms.size() - 1);
  };
  MESSAGE("diverse " << to_first(d) << " clones " << to_first(c));
  CHECK(to_first(d) > to_first(c));
}

TEST_CASE("checkpoint pair and study") {
  const auto data = testing::pooled_synth(small_synth(3));
  std::vector<CheckpointPair> pairs;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto run = train(quick_net(20 + s, 12), data.train, data.val);
    pairs.push_back(checkpoint_pair(run.history, data.val.features));
    const auto& p = pairs.back();
    CHECK(p.peak_epoch == run.history.peak_epoch());
    CHECK(p.overfit_epoch == 12);
    CHECK(p.peak == predict(run.history.checkpoint(p.peak_epoch), data.val.features));
    const auto capped = checkpoint_pair(run.history, data.val.features, 2);
    CHECK(capped.overfit_epoch == std::min<std::size_t>(12, 2 * p.peak_epoch));
  }
  const auto r = checkpoint_study(pairs, data.val.labels);
  CHECK(r.gap_gain_peak == doctest::Approx(r.ensemble_gap_peak - r.mean_member_gap_peak));
  CHECK(r.gap_gain_final == doctest::Approx(r.ensemble_gap_final - r.mean_member_gap_final));
  CHECK(r.diversity_peak > 0.0);

  std::vector<CheckpointPair> same = pairs;
  for (auto& p : same) p.overfit = p.peak;
  const auto flat = checkpoint_study(same, data.val.labels);
  CHECK(flat.gap_gain_peak == flat.gap_gain_final);
  CHECK(flat.diversity_peak == flat.diversity_final);
  CHECK_THROWS(checkpoint_study(std::span(pairs).first(1), data.val.labels));
}

TEST_CASE("checkpoint pair needs kept checkpoints") {
  const auto data = testing::pooled_synth(small_synth(4));
  auto config = quick_net(5, 9);
  config.checkpoint_stride = 100;
  const auto run = train(config, data.train, data.val);
  const std::size_t peak = run.history.peak_epoch();
  CHECK_NOTHROW(checkpoint_pair(run.history, data.val.features));
  if (peak > 1 && 2 * peak < 9) CHECK_THROWS(checkpoint_pair(run.history, data.val.features, 2));
}
