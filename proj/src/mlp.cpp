#include "divens/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "divens/metrics.hpp"

namespace divens {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
bool all_finite(std::span<const T> xs) {
  return std::all_of(xs.begin(), xs.end(), [](T x) { return std::isfinite(x); });
}

// out = x * W + b, accumulated over the input dimension in order for every
// output element, so a row's result never depends on the rest of the batch.
template <typename T>
DenseMatrix<T> affine(const DenseMatrix<T>& x, const DenseLayer<T>& layer) {
  const std::size_t in = layer.fan_in();
  const std::size_t out = layer.fan_out();
  DenseMatrix<T> z(x.rows(), out);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    T* zr = z.row(b).data();
    std::copy(layer.bias.begin(), layer.bias.end(), zr);
    const T* xr = x.row(b).data();
    for (std::size_t i = 0; i < in; ++i) {
      const T xi = xr[i];
      if (xi == T{0}) continue;
      const T* w = layer.weights.row(i).data();
      for (std::size_t o = 0; o < out; ++o) zr[o] += xi * w[o];
    }
  }
  return z;
}

template <typename T>
T sigmoid(T z) {
  return T{1} / (T{1} + std::exp(-z));
}

template <typename T>
double clamp_prob(T p) {
  return std::clamp(static_cast<double>(p), kLogClamp, 1.0 - kLogClamp);
}

// -mean[q log p~ + (1 - q) log(1 - p~)]
template <typename T>
double cross_entropy(const DenseMatrix<T>& pred, const DenseMatrix<T>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError("loss: prediction and target shapes differ");
  }
  if (pred.empty()) throw std::invalid_argument("loss: empty batch");
  double sum = 0.0;
  const auto p = pred.values();
  const auto q = target.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pc = clamp_prob(p[i]);
    const double qi = q[i];
    sum += qi * std::log(pc) + (1.0 - qi) * std::log(1.0 - pc);
  }
  return -sum / static_cast<double>(p.size());
}

template <typename T>
void check_shape(const DenseMatrix<T>& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
}

template <typename T>
std::array<DenseMatrix<T>, kNumHiddenLayers> sample_masks(const BasicNetwork<T>& net,
                                                          std::size_t batch, std::uint64_t seed) {
  std::array<DenseMatrix<T>, kNumHiddenLayers> masks;
  const double p = net.config.dropout;
  if (p <= 0.0) return masks;
  std::mt19937_64 rng(seed);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  for (std::size_t l = 0; l < kNumHiddenLayers; ++l) {
    masks[l] = DenseMatrix<T>(batch, net.layers[l].fan_out());
    for (T& m : masks[l].values()) m = uniform01(rng) < p ? T{0} : keep_scale;
  }
  return masks;
}

MatrixF gather_rows(const MatrixF& m, std::span<const std::size_t> idx) { return m.select_rows(idx); }

}  // namespace

void NetworkConfig::validate() const {
  if (input_dim == 0) throw std::invalid_argument("network config: input_dim must be >= 1");
  if (num_classes == 0) throw std::invalid_argument("network config: num_classes must be >= 1");
  if (hidden_sizes.size() != kNumHiddenLayers) {
    throw std::invalid_argument("network config: exactly 3 hidden sizes required");
  }
  for (std::size_t h : hidden_sizes) {
    if (h == 0) throw std::invalid_argument("network config: hidden sizes must be >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("network config: dropout must be in [0, 1)");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("network config: learning_rate must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("network config: Adam betas must be in (0, 1)");
  }
  if (!(adam_eps > 0.0)) throw std::invalid_argument("network config: adam_eps must be > 0");
  if (batch_size == 0) throw std::invalid_argument("network config: batch_size must be >= 1");
  if (max_epochs == 0) throw std::invalid_argument("network config: max_epochs must be >= 1");
  if (checkpoint_stride == 0) {
    throw std::invalid_argument("network config: checkpoint_stride must be >= 1");
  }
}

std::array<std::size_t, kNumLayers + 1> NetworkConfig::widths() const {
  return {input_dim, hidden_sizes.at(0), hidden_sizes.at(1), hidden_sizes.at(2), num_classes};
}

template <typename T>
std::size_t BasicNetwork<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

template <typename T>
template <typename U>
BasicNetwork<U> BasicNetwork<T>::cast() const {
  auto convert = [](const DenseMatrix<T>& m) {
    DenseMatrix<U> out(m.rows(), m.cols());
    std::transform(m.values().begin(), m.values().end(), out.values().begin(),
                   [](T x) { return static_cast<U>(x); });
    return out;
  };
  auto convert_vec = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
  BasicNetwork<U> out;
  out.config = config;
  out.step = step;
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    out.layers[l].weights = convert(layers[l].weights);
    out.layers[l].weights_m = convert(layers[l].weights_m);
    out.layers[l].weights_v = convert(layers[l].weights_v);
    out.layers[l].bias = convert_vec(layers[l].bias);
    out.layers[l].bias_m = convert_vec(layers[l].bias_m);
    out.layers[l].bias_v = convert_vec(layers[l].bias_v);
  }
  return out;
}

template <typename T>
BasicNetwork<T> init_network(const NetworkConfig& config) {
  config.validate();
  BasicNetwork<T> net;
  net.config = config;
  std::mt19937_64 rng(config.seed);
  const auto w = config.widths();
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    const std::size_t fan_in = w[l];
    const std::size_t fan_out = w[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    auto& layer = net.layers[l];
    layer.weights = DenseMatrix<T>(fan_in, fan_out);
    for (T& x : layer.weights.values()) x = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
    layer.bias.assign(fan_out, T{0});
    layer.weights_m = DenseMatrix<T>(fan_in, fan_out, T{0});
    layer.weights_v = DenseMatrix<T>(fan_in, fan_out, T{0});
    layer.bias_m.assign(fan_out, T{0});
    layer.bias_v.assign(fan_out, T{0});
  }
  return net;
}

template <typename T>
ForwardPass<T> forward_with_masks(const BasicNetwork<T>& net, const DenseMatrix<T>& batch,
                                  const std::array<DenseMatrix<T>, kNumHiddenLayers>& masks) {
  if (batch.cols() != net.config.input_dim) {
    throw DimensionError("forward: batch has " + std::to_string(batch.cols()) +
                         " columns, network expects " + std::to_string(net.config.input_dim));
  }
  if (!all_finite<T>(batch.values())) throw std::invalid_argument("forward: non-finite input");

  ForwardPass<T> pass;
  pass.inputs[0] = batch;
  for (std::size_t l = 0; l < kNumHiddenLayers; ++l) {
    DenseMatrix<T> z = affine(pass.inputs[l], net.layers[l]);
    DenseMatrix<T> a = z;
    for (T& x : a.values()) x = std::max(x, T{0});
    if (!masks[l].empty()) {
      check_shape(masks[l], batch.rows(), net.layers[l].fan_out(), "forward: dropout mask");
      auto av = a.values();
      const auto mv = masks[l].values();
      for (std::size_t i = 0; i < av.size(); ++i) av[i] *= mv[i];
    }
    pass.pre_activations[l] = std::move(z);
    pass.inputs[l + 1] = std::move(a);
    pass.masks[l] = masks[l];
  }
  pass.output = affine(pass.inputs[kNumHiddenLayers], net.layers[kNumHiddenLayers]);
  for (T& x : pass.output.values()) x = sigmoid(x);
  return pass;
}

template <typename T>
ForwardPass<T> forward(const BasicNetwork<T>& net, const DenseMatrix<T>& batch, Mode mode,
                       std::uint64_t seed) {
  if (mode == Mode::kEval) return forward_with_masks(net, batch, {});
  return forward_with_masks(net, batch, sample_masks(net, batch.rows(), seed));
}

template <typename T>
double bce_loss(const DenseMatrix<T>& pred, const DenseMatrix<T>& labels) {
  return cross_entropy(pred, labels);
}

template <typename T>
double diversity_aware_loss(const DenseMatrix<T>& pred, const DenseMatrix<T>& labels,
                            const DenseMatrix<T>& ensemble, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("diversity_aware_loss: lambda must be in [0, 1]");
  }
  const double fit = cross_entropy(pred, labels);
  if (lambda == 0.0) return fit;
  return (1.0 - lambda) * fit - lambda * cross_entropy(pred, ensemble);
}

template <typename T>
double evaluate_loss(const DenseMatrix<T>& pred, const DenseMatrix<T>& labels,
                     const LossSpec<T>& loss) {
  if (loss.lambda > 0.0 && loss.ensemble == nullptr) {
    throw std::invalid_argument("diversity-aware loss needs ensemble outputs");
  }
  if (!loss.diversity_aware()) return bce_loss(pred, labels);
  return diversity_aware_loss(pred, labels, *loss.ensemble, loss.lambda);
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    for (double g : weights[l].values()) s += g * g;
    for (double g : biases[l]) s += g * g;
  }
  return s;
}

template <typename T>
Gradients backward(const BasicNetwork<T>& net, const ForwardPass<T>& pass,
                   const DenseMatrix<T>& labels, const LossSpec<T>& loss) {
  const DenseMatrix<T>& pred = pass.output;
  const std::size_t batch = pred.rows();
  const std::size_t classes = pred.cols();
  check_shape(labels, batch, classes, "backward: labels");
  if (loss.ensemble != nullptr) check_shape(*loss.ensemble, batch, classes, "backward: ensemble");

  Gradients grads;
  grads.loss = evaluate_loss(pred, labels, loss);

  // d loss / d logit. Inside the clamp band the sigmoid and log terms cancel to
  // (1 - lambda)(p - y) - lambda (p - q); outside it the loss is flat.
  const double lambda = loss.diversity_aware() ? loss.lambda : 0.0;
  const double inv_count = 1.0 / static_cast<double>(batch * classes);
  MatrixD delta(batch, classes);
  {
    const auto p = pred.values();
    const auto y = labels.values();
    auto dv = delta.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double pi = p[i];
      if (pi < kLogClamp || pi > 1.0 - kLogClamp) {
        dv[i] = 0.0;
        continue;
      }
      double g = (1.0 - lambda) * (pi - static_cast<double>(y[i]));
      if (lambda > 0.0) g -= lambda * (pi - static_cast<double>(loss.ensemble->values()[i]));
      dv[i] = g * inv_count;
    }
  }

  for (std::size_t l = kNumLayers; l-- > 0;) {
    const auto& layer = net.layers[l];
    const DenseMatrix<T>& input = pass.inputs[l];
    const std::size_t in = layer.fan_in();
    const std::size_t out = layer.fan_out();

    MatrixD dw(in, out, 0.0);
    std::vector<double> db(out, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* dr = delta.row(b).data();
      const T* xr = input.row(b).data();
      for (std::size_t o = 0; o < out; ++o) db[o] += dr[o];
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = static_cast<double>(xr[i]);
        if (xi == 0.0) continue;
        double* gw = dw.row(i).data();
        for (std::size_t o = 0; o < out; ++o) gw[o] += xi * dr[o];
      }
    }
    grads.weights[l] = std::move(dw);
    grads.biases[l] = std::move(db);
    if (l == 0) break;

    // Back through the affine map, the dropout multiplier and the ReLU.
    const std::size_t h = l - 1;
    MatrixD prev(batch, in, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* dr = delta.row(b).data();
      double* pr = prev.row(b).data();
      const T* z = pass.pre_activations[h].row(b).data();
      const T* mask = pass.masks[h].empty() ? nullptr : pass.masks[h].row(b).data();
      for (std::size_t i = 0; i < in; ++i) {
        if (!(z[i] > T{0})) continue;
        const double m = mask ? static_cast<double>(mask[i]) : 1.0;
        if (m == 0.0) continue;
        const T* w = layer.weights.row(i).data();
        double s = 0.0;
        for (std::size_t o = 0; o < out; ++o) s += static_cast<double>(w[o]) * dr[o];
        pr[i] = s * m;
      }
    }
    delta = std::move(prev);
  }
  return grads;
}

template <typename T>
void adam_update(std::span<T> params, std::span<const double> grads, std::span<T> m,
                 std::span<T> v, const AdamHyper& hyper, std::uint64_t t) {
  if (t == 0) throw std::invalid_argument("adam_update: step must be >= 1");
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double mi = hyper.beta1 * static_cast<double>(m[i]) + (1.0 - hyper.beta1) * g;
    const double vi = hyper.beta2 * static_cast<double>(v[i]) + (1.0 - hyper.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double update = hyper.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + hyper.eps);
    params[i] = static_cast<T>(static_cast<double>(params[i]) - update);
  }
}

template <typename T>
void adam_step(BasicNetwork<T>& net, const Gradients& grads) {
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    if (grads.weights[l].rows() != net.layers[l].fan_in() ||
        grads.weights[l].cols() != net.layers[l].fan_out() ||
        grads.biases[l].size() != net.layers[l].fan_out()) {
      throw DimensionError("adam_step: gradient shape mismatch at layer " + std::to_string(l));
    }
    if (!all_finite<double>(grads.weights[l].values()) ||
        !all_finite(std::span<const double>(grads.biases[l]))) {
      throw DivergenceError("diverged");
    }
  }
  const AdamHyper hyper{net.config.learning_rate, net.config.adam_beta1, net.config.adam_beta2,
                        net.config.adam_eps};
  const std::uint64_t t = ++net.step;
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    auto& layer = net.layers[l];
    adam_update<T>(layer.weights.values(), grads.weights[l].values(), layer.weights_m.values(),
                   layer.weights_v.values(), hyper, t);
    adam_update<T>(layer.bias, grads.biases[l], layer.bias_m, layer.bias_v, hyper, t);
    if (!all_finite<T>(layer.weights.values()) || !all_finite<T>(std::span<const T>(layer.bias))) {
      throw DivergenceError("diverged");
    }
  }
}

std::size_t TrainingHistory::peak_epoch() const {
  if (epochs.empty()) throw std::logic_error("empty training history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < epochs.size(); ++i) {
    if (epochs[i].val_gap > epochs[best].val_gap) best = i;
  }
  return epochs[best].epoch;
}

std::size_t TrainingHistory::final_epoch() const {
  if (epochs.empty()) throw std::logic_error("empty training history");
  return epochs.back().epoch;
}

const Network& TrainingHistory::checkpoint(std::size_t epoch) const {
  const auto it = checkpoints.find(epoch);
  if (it == checkpoints.end()) {
    throw std::out_of_range("no checkpoint for epoch " + std::to_string(epoch));
  }
  return it->second;
}

const EpochRecord& TrainingHistory::record(std::size_t epoch) const {
  for (const auto& r : epochs) {
    if (r.epoch == epoch) return r;
  }
  throw std::out_of_range("no record for epoch " + std::to_string(epoch));
}

bool operator==(const TrainingHistory& a, const TrainingHistory& b) {
  if (a.epochs.size() != b.epochs.size()) return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    if (a.epochs[i].epoch != b.epochs[i].epoch || a.epochs[i].train_loss != b.epochs[i].train_loss ||
        a.epochs[i].val_gap != b.epochs[i].val_gap) {
      return false;
    }
  }
  return a.checkpoints == b.checkpoints;
}

TrainResult train(const NetworkConfig& config, const Dataset& train_data, const Dataset& val_data,
                  const TrainOptions& options) {
  config.validate();
  const std::size_t n = train_data.features.rows();
  if (n == 0) throw std::invalid_argument("train: empty training set");
  if (train_data.labels.num_videos() != n) {
    throw DimensionError("train: features and labels have different row counts");
  }
  if (val_data.labels.num_videos() != val_data.features.rows()) {
    throw DimensionError("train: validation features and labels have different row counts");
  }
  if (train_data.features.cols() != config.input_dim || val_data.features.cols() != config.input_dim) {
    throw DimensionError("train: feature dim does not match input_dim");
  }
  if (train_data.labels.num_classes() != config.num_classes ||
      val_data.labels.num_classes() != config.num_classes) {
    throw DimensionError("train: label classes do not match num_classes");
  }
  if (options.lambda < 0.0 || options.lambda > 1.0) {
    throw std::invalid_argument("train: lambda must be in [0, 1]");
  }
  const bool diverse = options.lambda > 0.0;
  if (diverse) {
    if (options.ensemble_targets == nullptr) {
      throw std::invalid_argument("train: lambda > 0 requires ensemble targets");
    }
    check_shape(*options.ensemble_targets, n, config.num_classes, "train: ensemble targets");
  }

  const MatrixF train_labels = train_data.labels.dense();
  Network net = init_network<float>(config);
  TrainingHistory history;
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto last_good = std::make_shared<const Network>(net);
  double best_gap = -1.0;
  std::size_t best_epoch = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    double loss_sum = 0.0;
    try {
      for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
        const std::size_t end = std::min(n, begin + config.batch_size);
        const std::span<const std::size_t> idx(order.data() + begin, end - begin);
        const MatrixF x = gather_rows(train_data.features, idx);
        const MatrixF y = gather_rows(train_labels, idx);
        MatrixF ens;
        LossSpec<float> spec;
        if (diverse) {
          ens = gather_rows(*options.ensemble_targets, idx);
          spec = {options.lambda, &ens};
        }
        const auto pass = forward(net, x, Mode::kTrain, rng());
        const Gradients grads = backward(net, pass, y, spec);
        if (!std::isfinite(grads.loss)) throw DivergenceError("diverged");
        loss_sum += grads.loss * static_cast<double>(idx.size());
        adam_step(net, grads);
      }
    } catch (const DivergenceError& e) {
      throw TrainingDivergedError(std::string(e.what()) + " at epoch " + std::to_string(epoch),
                                  epoch, last_good);
    }

    const double val_gap = gap_at_k(predict(net, val_data.features), val_data.labels, options.gap_k);
    history.epochs.push_back({epoch, loss_sum / static_cast<double>(n), val_gap});

    const bool new_peak = val_gap > best_gap;
    if (new_peak) {
      // The previous peak is dropped unless the stride keeps it.
      if (best_epoch != 0 && best_epoch % config.checkpoint_stride != 0) {
        history.checkpoints.erase(best_epoch);
      }
      best_gap = val_gap;
      best_epoch = epoch;
    }
    if (new_peak || epoch % config.checkpoint_stride == 0 || epoch == config.max_epochs) {
      history.checkpoints.emplace(epoch, net);
    }
    last_good = std::make_shared<const Network>(net);
  }
  return {std::move(net), std::move(history)};
}

template <typename T>
DenseMatrix<T> predict_matrix(const BasicNetwork<T>& net, const DenseMatrix<T>& features,
                              std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("predict: batch_size must be >= 1");
  if (features.cols() != net.config.input_dim) {
    throw DimensionError("predict: feature dim does not match network input_dim");
  }
  DenseMatrix<T> out(features.rows(), net.config.num_classes);
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < features.rows(); begin += batch_size) {
    const std::size_t end = std::min(features.rows(), begin + batch_size);
    idx.resize(end - begin);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
    const auto pass = forward_with_masks(net, features.select_rows(idx), {});
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto src = pass.output.row(i);
      std::copy(src.begin(), src.end(), out.row(begin + i).begin());
    }
  }
  return out;
}

PredictionMatrix predict(const Network& net, const MatrixF& features, std::size_t batch_size) {
  return PredictionMatrix(predict_matrix(net, features, batch_size));
}

// Explicit instantiations: float for training, double for the gradient-check shadow.
#define DIVENS_INSTANTIATE(T)                                                                       \
  template struct BasicNetwork<T>;                                                                 \
  template BasicNetwork<T> init_network<T>(const NetworkConfig&);                                  \
  template ForwardPass<T> forward<T>(const BasicNetwork<T>&, const DenseMatrix<T>&, Mode,          \
                                     std::uint64_t);                                               \
  template ForwardPass<T> forward_with_masks<T>(                                                   \
      const BasicNetwork<T>&, const DenseMatrix<T>&,                                               \
      const std::array<DenseMatrix<T>, kNumHiddenLayers>&);                                        \
  template double bce_loss<T>(const DenseMatrix<T>&, const DenseMatrix<T>&);                       \
  template double diversity_aware_loss<T>(const DenseMatrix<T>&, const DenseMatrix<T>&,            \
                                          const DenseMatrix<T>&, double);                          \
  template double evaluate_loss<T>(const DenseMatrix<T>&, const DenseMatrix<T>&,                   \
                                   const LossSpec<T>&);                                            \
  template Gradients backward<T>(const BasicNetwork<T>&, const ForwardPass<T>&,                    \
                                 const DenseMatrix<T>&, const LossSpec<T>&);                       \
  template void adam_update<T>(std::span<T>, std::span<const double>, std::span<T>, std::span<T>,  \
                               const AdamHyper&, std::uint64_t);                                   \
  template void adam_step<T>(BasicNetwork<T>&, const Gradients&);                                  \
  template DenseMatrix<T> predict_matrix<T>(const BasicNetwork<T>&, const DenseMatrix<T>&,         \
                                            std::size_t);

DIVENS_INSTANTIATE(float)
DIVENS_INSTANTIATE(double)
#undef DIVENS_INSTANTIATE

template BasicNetwork<double> BasicNetwork<float>::cast<double>() const;
template BasicNetwork<float> BasicNetwork<double>::cast<float>() const;
template BasicNetwork<float> BasicNetwork<float>::cast<float>() const;
template BasicNetwork<double> BasicNetwork<double>::cast<double>() const;

}  // namespace divens
