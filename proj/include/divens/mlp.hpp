#pragma once

// Fully connected multi-label network: three ReLU hidden layers with inverted
// dropout, sigmoid outputs, binary cross entropy or the diversity-aware loss,
// trained with Adam.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "divens/core.hpp"

namespace divens {

inline constexpr std::size_t kNumHiddenLayers = 3;
inline constexpr std::size_t kNumLayers = kNumHiddenLayers + 1;
inline constexpr double kLogClamp = 1e-7;

struct NetworkConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_sizes{64, 64, 64};
  std::size_t num_classes = 0;
  double dropout = 0.0;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 50;
  std::uint64_t seed = 0;
  // Keep a checkpoint every this many epochs; the peak and final epochs are
  // always kept.
  std::size_t checkpoint_stride = 1;

  void validate() const;
  // Widths of the four affine layers' inputs and outputs, input first.
  std::array<std::size_t, kNumLayers + 1> widths() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

template <typename T>
struct DenseLayer {
  DenseMatrix<T> weights;  // fan_in x fan_out
  std::vector<T> bias;
  DenseMatrix<T> weights_m, weights_v;
  std::vector<T> bias_m, bias_v;

  std::size_t fan_in() const { return weights.rows(); }
  std::size_t fan_out() const { return weights.cols(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

template <typename T>
struct BasicNetwork {
  NetworkConfig config;
  std::array<DenseLayer<T>, kNumLayers> layers;
  std::uint64_t step = 0;

  std::size_t parameter_count() const;

  template <typename U>
  BasicNetwork<U> cast() const;

  friend bool operator==(const BasicNetwork&, const BasicNetwork&) = default;
};

using Network = BasicNetwork<float>;
using NetworkD = BasicNetwork<double>;

template <typename T>
BasicNetwork<T> init_network(const NetworkConfig& config);

enum class Mode { kTrain, kEval };

// Activations recorded by a forward pass, consumed by backward.
template <typename T>
struct ForwardPass {
  std::array<DenseMatrix<T>, kNumLayers> inputs;  // input to each affine layer
  std::array<DenseMatrix<T>, kNumHiddenLayers> pre_activations;
  // Per-unit multipliers in {0, 1/(1-p)}; empty when no dropout was applied.
  std::array<DenseMatrix<T>, kNumHiddenLayers> masks;
  DenseMatrix<T> output;
};

template <typename T>
ForwardPass<T> forward(const BasicNetwork<T>& net, const DenseMatrix<T>& batch, Mode mode,
                       std::uint64_t seed);

// Replays a forward pass with fixed dropout masks (empty matrices = no dropout).
template <typename T>
ForwardPass<T> forward_with_masks(const BasicNetwork<T>& net, const DenseMatrix<T>& batch,
                                  const std::array<DenseMatrix<T>, kNumHiddenLayers>& masks);

template <typename T>
double bce_loss(const DenseMatrix<T>& pred, const DenseMatrix<T>& labels);

// (1 - lambda) * bce(pred, labels) - lambda * H(pred, ensemble), where
// H(p, q) = -mean[q log p + (1 - q) log(1 - p)] with the same log clamp.
template <typename T>
double diversity_aware_loss(const DenseMatrix<T>& pred, const DenseMatrix<T>& labels,
                            const DenseMatrix<T>& ensemble, double lambda);

// Loss selector; ensemble must be set when lambda > 0.
template <typename T>
struct LossSpec {
  double lambda = 0.0;
  const DenseMatrix<T>* ensemble = nullptr;

  bool diversity_aware() const { return lambda > 0.0 && ensemble != nullptr; }
};

struct Gradients {
  std::array<MatrixD, kNumLayers> weights;
  std::array<std::vector<double>, kNumLayers> biases;
  double loss = 0.0;

  double squared_norm() const;
};

template <typename T>
double evaluate_loss(const DenseMatrix<T>& pred, const DenseMatrix<T>& labels,
                     const LossSpec<T>& loss);

template <typename T>
Gradients backward(const BasicNetwork<T>& net, const ForwardPass<T>& pass,
                   const DenseMatrix<T>& labels, const LossSpec<T>& loss);

struct AdamHyper {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update for a flat parameter block at step t >= 1.
template <typename T>
void adam_update(std::span<T> params, std::span<const double> grads, std::span<T> m,
                 std::span<T> v, const AdamHyper& hyper, std::uint64_t t);

// Throws DivergenceError("diverged") on a non-finite gradient, leaving the
// network untouched.
template <typename T>
void adam_step(BasicNetwork<T>& net, const Gradients& grads);

struct EpochRecord {
  std::size_t epoch;  // 1-based
  double train_loss;
  double val_gap;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::map<std::size_t, Network> checkpoints;

  // argmax of validation GAP, earliest on ties.
  std::size_t peak_epoch() const;
  std::size_t final_epoch() const;
  bool has_checkpoint(std::size_t epoch) const { return checkpoints.count(epoch) != 0; }
  const Network& checkpoint(std::size_t epoch) const;
  const EpochRecord& record(std::size_t epoch) const;

  friend bool operator==(const TrainingHistory& a, const TrainingHistory& b);
};

struct Dataset {
  MatrixF features;
  LabelSet labels;
};

struct TrainOptions {
  double lambda = 0.0;
  // Ensemble outputs aligned with the training rows; required when lambda > 0.
  const MatrixF* ensemble_targets = nullptr;
  std::size_t gap_k = 20;
};

struct TrainResult {
  Network network;
  TrainingHistory history;
};

class TrainingDivergedError : public DivergenceError {
 public:
  TrainingDivergedError(const std::string& what, std::size_t epoch,
                        std::shared_ptr<const Network> last_good)
      : DivergenceError(what), epoch_(epoch), last_good_(std::move(last_good)) {}

  std::size_t epoch() const { return epoch_; }
  // Network state at the end of the last completed epoch (or initialization).
  const std::shared_ptr<const Network>& last_good() const { return last_good_; }

 private:
  std::size_t epoch_;
  std::shared_ptr<const Network> last_good_;
};

TrainResult train(const NetworkConfig& config, const Dataset& train_data, const Dataset& val_data,
                  const TrainOptions& options = {});

template <typename T>
DenseMatrix<T> predict_matrix(const BasicNetwork<T>& net, const DenseMatrix<T>& features,
                              std::size_t batch_size = 256);

PredictionMatrix predict(const Network& net, const MatrixF& features, std::size_t batch_size = 256);

}  // namespace divens
