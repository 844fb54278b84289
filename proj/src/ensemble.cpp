#include "divens/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "divens/diversity.hpp"
#include "divens/parallel.hpp"

namespace divens {

namespace {

void require_same_dims(const PredictionMatrix& a, const PredictionMatrix& b, const char* what) {
  if (a.num_videos() != b.num_videos() || a.num_classes() != b.num_classes()) {
    throw DimensionError(std::string(what) + ": matrices are " + std::to_string(a.num_videos()) +
                         "x" + std::to_string(a.num_classes()) + " and " +
                         std::to_string(b.num_videos()) + "x" + std::to_string(b.num_classes()));
  }
}

}  // namespace

std::vector<PredictionMatrix> predictions_of(std::span<const ClassifierRecord> records) {
  std::vector<PredictionMatrix> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.predictions);
  return out;
}

PredictionMatrix average(std::span<const PredictionMatrix> members) {
  if (members.empty()) throw std::invalid_argument("average: no members");
  for (const auto& m : members) require_same_dims(members.front(), m, "average");

  const auto& first = members.front();
  std::vector<double> sum(first.values().size(), 0.0);
  for (const auto& m : members) {
    const auto v = m.values();
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  std::vector<float> out(sum.size());
  for (std::size_t i = 0; i < sum.size(); ++i) out[i] = static_cast<float>(sum[i] * inv);
  return PredictionMatrix(first.num_videos(), first.num_classes(), std::move(out));
}

PredictionMatrix weighted_combine(const PredictionMatrix& a, const PredictionMatrix& b,
                                  double alpha) {
  require_same_dims(a, b, "weighted_combine");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("weighted_combine: alpha must be in [0, 1]");
  }
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<float> out(av.size());
  const double beta = 1.0 - alpha;
  for (std::size_t i = 0; i < av.size(); ++i) {
    out[i] = static_cast<float>(alpha * av[i] + beta * bv[i]);
  }
  return PredictionMatrix(a.num_videos(), a.num_classes(), std::move(out));
}

Ensemble::Ensemble(std::vector<ClassifierRecord> members)
    : members_(std::move(members)),
      combined_([this] {
        if (members_.empty()) throw std::invalid_argument("ensemble needs at least one member");
        const auto preds = predictions_of(members_);
        return average(preds);
      }()) {}

Ensemble Ensemble::with_member(ClassifierRecord member) const {
  auto members = members_;
  members.push_back(std::move(member));
  return Ensemble(std::move(members));
}

bool Ensemble::contains_all(const Ensemble& other) const {
  return std::all_of(other.members_.begin(), other.members_.end(), [&](const ClassifierRecord& m) {
    return std::any_of(members_.begin(), members_.end(), [&](const ClassifierRecord& mine) {
      return mine.id == m.id && mine.predictions == m.predictions;
    });
  });
}

SweepResult alpha_sweep(const PredictionMatrix& a, const PredictionMatrix& b, const LabelSet& labels,
                        double grid_step, std::size_t k) {
  if (!(grid_step > 0.0 && grid_step <= 0.5)) {
    throw std::invalid_argument("alpha_sweep: grid_step must be in (0, 0.5]");
  }
  require_same_dims(a, b, "alpha_sweep");

  std::vector<double> alphas;
  const auto steps = static_cast<std::size_t>(std::floor(1.0 / grid_step + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) {
    alphas.push_back(std::min(1.0, static_cast<double>(i) * grid_step));
  }
  if (alphas.back() < 1.0) {
    // Snap a near-1 last point, otherwise append the endpoint.
    if (1.0 - alphas.back() < 1e-9) {
      alphas.back() = 1.0;
    } else {
      alphas.push_back(1.0);
    }
  }

  SweepResult result;
  result.grid.resize(alphas.size());
  parallel_for(alphas.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      result.grid[i] = {alphas[i], gap_at_k(weighted_combine(a, b, alphas[i]), labels, k)};
    }
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.grid.size(); ++i) {
    if (result.grid[i].gap > result.grid[best].gap) best = i;
  }
  result.best_alpha = result.grid[best].alpha;
  result.best_gap = result.grid[best].gap;
  return result;
}

SequentialBuild sequential_diverse_build(const Dataset& train_data, const Dataset& val_data,
                                         const NetworkConfig& base_config, std::size_t target_size,
                                         double lambda) {
  if (target_size == 0) throw std::invalid_argument("sequential_diverse_build: target_size >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("sequential_diverse_build: lambda must be in [0, 1]");
  }

  std::vector<TrainResult> runs;
  std::vector<ClassifierRecord> records;
  std::vector<PredictionMatrix> train_outputs;
  MatrixF ensemble_output;

  for (std::size_t i = 0; i < target_size; ++i) {
    NetworkConfig config = base_config;
    config.seed = base_config.seed + i;
    TrainOptions options;
    if (i > 0) {
      options.lambda = lambda;
      options.ensemble_targets = &ensemble_output;
    }
    TrainResult run = train(config, train_data, val_data, options);

    train_outputs.push_back(predict(run.network, train_data.features));
    ensemble_output = average(train_outputs).matrix();

    records.push_back({"seq-" + std::to_string(i), FeatureTag::kExternal, config.hidden_sizes,
                       config.dropout, CheckpointTag::final_epoch(),
                       predict(run.network, val_data.features)});
    runs.push_back(std::move(run));
  }
  return {Ensemble(std::move(records)), std::move(runs), std::move(ensemble_output)};
}

CheckpointPair checkpoint_pair(const TrainingHistory& history, const MatrixF& val_features,
                               std::size_t overfit_factor) {
  const std::size_t peak = history.peak_epoch();
  const std::size_t last = history.final_epoch();
  const std::size_t overfit = overfit_factor == 0 ? last : std::min(last, overfit_factor * peak);
  if (!history.has_checkpoint(peak)) {
    throw std::invalid_argument("checkpoint_study: missing peak checkpoint (epoch " +
                                std::to_string(peak) + ")");
  }
  if (!history.has_checkpoint(overfit)) {
    throw std::invalid_argument("checkpoint_study: missing checkpoint for epoch " +
                                std::to_string(overfit));
  }
  return {predict(history.checkpoint(peak), val_features),
          predict(history.checkpoint(overfit), val_features), peak, overfit};
}

CheckpointStudyReport checkpoint_study(std::span<const CheckpointPair> members,
                                       const LabelSet& val_labels, std::size_t k) {
  if (members.size() < 2) throw std::invalid_argument("checkpoint_study: need >= 2 members");
  std::vector<PredictionMatrix> peak, overfit;
  for (const auto& m : members) {
    peak.push_back(m.peak);
    overfit.push_back(m.overfit);
  }
  auto mean_gap = [&](const std::vector<PredictionMatrix>& set) {
    double s = 0.0;
    for (const auto& p : set) s += gap_at_k(p, val_labels, k);
    return s / static_cast<double>(set.size());
  };

  CheckpointStudyReport r;
  r.mean_member_gap_peak = mean_gap(peak);
  r.mean_member_gap_final = mean_gap(overfit);
  r.ensemble_gap_peak = gap_at_k(average(peak), val_labels, k);
  r.ensemble_gap_final = gap_at_k(average(overfit), val_labels, k);
  r.gap_gain_peak = r.ensemble_gap_peak - r.mean_member_gap_peak;
  r.gap_gain_final = r.ensemble_gap_final - r.mean_member_gap_final;
  r.diversity_peak = mean_pairwise_diversity(peak);
  r.diversity_final = mean_pairwise_diversity(overfit);
  return r;
}

}  // namespace divens
