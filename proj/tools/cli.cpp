#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "divens/config_json.hpp"
#include "divens/core.hpp"
#include "divens/diversity.hpp"
#include "divens/ensemble.hpp"
#include "divens/io.hpp"
#include "divens/metrics.hpp"
#include "divens/mlp.hpp"
#include "divens/pooling.hpp"
#include "divens/synth.hpp"

namespace divens::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RowSelection {
  std::string split_path;
  std::string part = "all";

  void attach(CLI::App* sub) {
    sub->add_option("--split", split_path, "split JSON file selecting rows");
    sub->add_option("--part", part, "rows to use with --split")
        ->check(CLI::IsMember({"train", "validation", "all"}));
  }

  // Empty optional means every row.
  std::optional<std::vector<std::size_t>> rows(std::size_t n) const {
    if (split_path.empty() || part == "all") return std::nullopt;
    const Split split = io::read_split(split_path);
    auto idx = part == "train" ? split.train : split.validation;
    for (std::size_t i : idx) {
      if (i >= n) {
        throw DimensionError("split index " + std::to_string(i) + " out of range for " +
                             std::to_string(n) + " rows");
      }
    }
    return idx;
  }
};

LabelSet load_labels(const std::string& path, const RowSelection& sel) {
  LabelSet labels = io::read_labels(path).labels;
  if (auto idx = sel.rows(labels.num_videos())) return labels.select_rows(*idx);
  return labels;
}

MatrixF load_features(const std::string& path, const RowSelection& sel) {
  MatrixF m = io::read_matrix(path);
  if (auto idx = sel.rows(m.rows())) return m.select_rows(*idx);
  return m;
}

std::vector<FrameSequence> load_frames(const std::string& path, const RowSelection& sel) {
  auto videos = io::read_frames(path);
  if (auto idx = sel.rows(videos.size())) {
    std::vector<FrameSequence> picked;
    picked.reserve(idx->size());
    for (std::size_t i : *idx) picked.push_back(videos[i]);
    return picked;
  }
  return videos;
}

// Dimension problems exit 2; out-of-range confidences are malformed input.
void check_aligned(const PredictionMatrix& preds, const LabelSet& labels, const std::string& what) {
  const auto report = validate_aligned(preds, labels);
  if (report.ok()) return;
  if (report.has_dimension_mismatch()) throw DimensionError(what + ": " + report.summary());
  throw FormatError(what + ": " + report.summary());
}

std::vector<PredictionMatrix> load_predictions(const std::vector<std::string>& paths) {
  std::vector<PredictionMatrix> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(io::read_predictions(p));
  return out;
}

std::string fmt(double x) {
  std::ostringstream ss;
  ss << std::setprecision(17) << x;
  return ss.str();
}

std::string matrix_csv(const MatrixD& m) {
  std::string out;
  for (std::size_t c = 0; c < m.cols(); ++c) out += (c ? ",m" : "m") + std::to_string(c);
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += fmt(m(r, c));
    }
    out += '\n';
  }
  return out;
}

json matrix_json(const MatrixD& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

NetworkConfig read_network_config(const std::string& path) {
  const auto text = io::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("malformed JSON in '" + path + "' at byte offset " + std::to_string(e.byte));
  }
  try {
    return j.get<NetworkConfig>();
  } catch (const std::exception& e) {
    throw FormatError("bad network config '" + path + "': " + e.what());
  }
}

// Fills zero input_dim / num_classes from the data and rejects mismatches.
void bind_config(NetworkConfig& config, const MatrixF& features, const LabelSet& labels) {
  if (config.input_dim == 0) config.input_dim = features.cols();
  if (config.num_classes == 0) config.num_classes = labels.num_classes();
  if (config.input_dim != features.cols()) {
    throw DimensionError("config input_dim " + std::to_string(config.input_dim) + " != feature dim " +
                         std::to_string(features.cols()));
  }
  if (config.num_classes != labels.num_classes()) {
    throw DimensionError("config num_classes " + std::to_string(config.num_classes) +
                         " != label classes " + std::to_string(labels.num_classes()));
  }
}

struct TrainValData {
  Dataset train;
  Dataset val;
  Split split;
};

TrainValData load_train_val(const std::string& features_path, const std::string& labels_path,
                            const std::string& split_path, std::uint64_t split_seed,
                            double train_fraction) {
  MatrixF features = io::read_matrix(features_path);
  LabelSet labels = io::read_labels(labels_path).labels;
  if (features.rows() != labels.num_videos()) {
    throw DimensionError("features have " + std::to_string(features.rows()) + " rows, labels " +
                         std::to_string(labels.num_videos()));
  }
  Split split = split_path.empty() ? make_split(features.rows(), train_fraction, split_seed)
                                   : io::read_split(split_path);
  for (const auto* part : {&split.train, &split.validation}) {
    for (std::size_t i : *part) {
      if (i >= features.rows()) throw DimensionError("split index " + std::to_string(i) + " out of range");
    }
  }
  if (split.train.empty() || split.validation.empty()) {
    throw std::invalid_argument("split needs non-empty train and validation parts");
  }
  return {{features.select_rows(split.train), labels.select_rows(split.train)},
          {features.select_rows(split.validation), labels.select_rows(split.validation)},
          std::move(split)};
}

std::string epoch_dir(std::size_t epoch) {
  std::ostringstream ss;
  ss << "epoch_" << std::setw(4) << std::setfill('0') << epoch;
  return ss.str();
}

io::CheckpointInfo info_of(const TrainingHistory& h, std::size_t epoch) {
  const auto& r = h.record(epoch);
  return {r.epoch, r.train_loss, r.val_gap};
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args);

 private:
  void emit(const json& j) {
    if (!quiet_) out_ << j.dump(2) << "\n";
  }

  void add_synth(CLI::App& app);
  void add_pool(CLI::App& app);
  void add_codebook(CLI::App& app);
  void add_pca(CLI::App& app);
  void add_train(CLI::App& app);
  void add_predict(CLI::App& app);
  void add_gap(CLI::App& app);
  void add_ensemble(CLI::App& app);
  void add_sweep(CLI::App& app);
  void add_diversity(CLI::App& app);
  void add_wrongsets(CLI::App& app);
  void add_histshift(CLI::App& app);
  void add_seqbuild(CLI::App& app);

  std::ostream& out_;
  std::ostream& err_;
  bool quiet_ = false;
  std::function<void()> action_;
};

void Runner::add_synth(CLI::App& app) {
  auto* sub = app.add_subcommand("synth", "generate a synthetic multi-label video dataset");
  auto config_path = std::make_shared<std::string>();
  auto out_dir = std::make_shared<std::string>();
  auto seed = std::make_shared<std::uint64_t>(0);
  sub->add_option("--config", *config_path, "synth config JSON")->required();
  sub->add_option("--out-dir", *out_dir)->required();
  auto* seed_opt = sub->add_option("--seed", *seed, "overrides the config seed");
  sub->callback([=, this] {
    action_ = [=, this] {
      json j;
      try {
        j = json::parse(io::read_file(*config_path));
      } catch (const json::parse_error& e) {
        throw FormatError("malformed JSON in '" + *config_path + "' at byte offset " +
                          std::to_string(e.byte));
      }
      SynthConfig config;
      try {
        config = j.get<SynthConfig>();
      } catch (const std::exception& e) {
        throw FormatError("bad synth config '" + *config_path + "': " + e.what());
      }
      if (seed_opt->count()) config.seed = *seed;
      const SynthDataset data = generate(config);
      const fs::path dir(*out_dir);
      fs::create_directories(dir);
      std::vector<std::string> ids;
      ids.reserve(data.videos.size());
      for (const auto& v : data.videos) ids.push_back(v.video_id());
      io::write_frames(dir / "frames.divf", data.videos);
      io::write_labels(dir / "labels.csv", ids, data.labels);
      io::write_split(dir / "split.json", data.split);
      io::write_file_atomic(dir / "config.json", json(config).dump(2) + "\n");
      emit({{"videos", data.videos.size()},
            {"classes", data.labels.num_classes()},
            {"feature_dim", config.feature_dim},
            {"positives", data.labels.total_positives()},
            {"train", data.split.train.size()},
            {"validation", data.split.validation.size()},
            {"frames", (dir / "frames.divf").string()},
            {"labels", (dir / "labels.csv").string()},
            {"split", (dir / "split.json").string()}});
    };
  });
}

void Runner::add_pool(CLI::App& app) {
  auto* sub = app.add_subcommand("pool", "pool frame sequences into video descriptors");
  auto method = std::make_shared<std::string>();
  auto frames = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto codebook = std::make_shared<std::string>();
  auto pca = std::make_shared<std::string>();
  sub->add_option("--method", *method)->required()->check(CLI::IsMember({"mean", "meanstd", "roi", "bow"}));
  sub->add_option("--frames", *frames)->required();
  sub->add_option("--out", *out)->required();
  sub->add_option("--codebook", *codebook, "codebook file (bow)");
  sub->add_option("--pca", *pca, "whitening model file (roi)");
  sub->callback([=, this] {
    action_ = [=, this] {
      const PoolMethod m = pool_method_from_string(*method);
      std::optional<Codebook> cb;
      std::optional<PcaWhitenModel> wm;
      if (m == PoolMethod::kBow) {
        if (codebook->empty()) throw std::invalid_argument("pool --method bow needs --codebook");
        cb = io::read_codebook(*codebook);
      }
      if (m == PoolMethod::kRoi) {
        if (pca->empty()) throw std::invalid_argument("pool --method roi needs --pca");
        wm = io::read_whitening(*pca);
      }
      const auto videos = io::read_frames(*frames);
      if (videos.empty()) throw FormatError("frame file '" + *frames + "' has no records");
      const MatrixF pooled = pool_features(videos, m, cb ? &*cb : nullptr, wm ? &*wm : nullptr);
      io::write_matrix(*out, pooled);
      emit({{"method", *method}, {"rows", pooled.rows()}, {"cols", pooled.cols()}, {"out", *out}});
    };
  });
}

void Runner::add_codebook(CLI::App& app) {
  auto* sub = app.add_subcommand("codebook", "fit a k-means codebook on frame descriptors");
  auto frames = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto k = std::make_shared<std::size_t>(64);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto max_iters = std::make_shared<std::size_t>(100);
  auto sel = std::make_shared<RowSelection>();
  sub->add_option("--frames", *frames)->required();
  sub->add_option("--out", *out)->required();
  sub->add_option("--k", *k)->check(CLI::PositiveNumber);
  sub->add_option("--seed", *seed);
  sub->add_option("--max-iters", *max_iters)->check(CLI::PositiveNumber);
  sel->attach(sub);
  sub->callback([=, this] {
    action_ = [=, this] {
      const auto videos = load_frames(*frames, *sel);
      if (videos.empty()) throw FormatError("frame file '" + *frames + "' has no records");
      const MatrixF samples = stack_frames(videos);
      const KMeansResult fit = kmeans_fit(samples, *k, *seed, *max_iters);
      io::write_codebook(*out, fit.codebook);
      emit({{"k", *k},
            {"samples", samples.rows()},
            {"iterations", fit.iterations},
            {"converged", fit.converged},
            {"inertia", fit.inertia},
            {"out", *out}});
    };
  });
}

void Runner::add_pca(CLI::App& app) {
  auto* sub = app.add_subcommand("pca", "fit PCA whitening on regional max-pooled vectors");
  auto frames = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto eps = std::make_shared<double>(kDefaultWhitenEps);
  auto sel = std::make_shared<RowSelection>();
  sub->add_option("--frames", *frames)->required();
  sub->add_option("--out", *out)->required();
  sub->add_option("--eps", *eps);
  sel->attach(sub);
  sub->callback([=, this] {
    action_ = [=, this] {
      const auto videos = load_frames(*frames, *sel);
      if (videos.empty()) throw FormatError("frame file '" + *frames + "' has no records");
      const std::size_t d = videos.front().dim();
      std::vector<double> stacked;
      std::size_t n = 0;
      for (const auto& v : videos) {
        if (v.dim() != d) throw DimensionError("pca: inconsistent frame dims");
        const MatrixD regions = roi_region_vectors(v);
        for (std::size_t r = 0; r < regions.rows(); ++r) {
          const auto row = regions.row(r);
          stacked.insert(stacked.end(), row.begin(), row.end());
          ++n;
        }
      }
      const PcaWhitenModel model = fit_pca_whitening(MatrixD(n, d, std::move(stacked)), *eps);
      io::write_whitening(*out, model, *eps);
      emit({{"dim", d}, {"samples", n}, {"eps", *eps}, {"out", *out}});
    };
  });
}

void Runner::add_train(CLI::App& app) {
  auto* sub = app.add_subcommand("train", "train one MLP and save checkpoints");
  auto features = std::make_shared<std::string>();
  auto labels = std::make_shared<std::string>();
  auto config_path = std::make_shared<std::string>();
  auto out_dir = std::make_shared<std::string>();
  auto split = std::make_shared<std::string>();
  auto split_seed = std::make_shared<std::uint64_t>(1);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto lambda = std::make_shared<double>(0.0);
  auto targets = std::make_shared<std::string>();
  auto k = std::make_shared<std::size_t>(kDefaultTopK);
  sub->add_option("--features", *features)->required();
  sub->add_option("--labels", *labels)->required();
  sub->add_option("--config", *config_path)->required();
  sub->add_option("--out-dir", *out_dir)->required();
  sub->add_option("--split", *split, "split JSON; default is a seeded 80/20 split");
  sub->add_option("--split-seed", *split_seed);
  auto* seed_opt = sub->add_option("--seed", *seed, "overrides the config seed");
  sub->add_option("--lambda", *lambda, "diversity-aware loss weight")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--targets", *targets, "ensemble outputs on the training rows (with --lambda)");
  sub->add_option("--k", *k)->check(CLI::PositiveNumber);
  sub->callback([=, this] {
    action_ = [=, this] {
      NetworkConfig config = read_network_config(*config_path);
      if (seed_opt->count()) config.seed = *seed;
      const TrainValData data = load_train_val(*features, *labels, *split, *split_seed, 0.8);
      bind_config(config, data.train.features, data.train.labels);

      std::optional<MatrixF> target_matrix;
      TrainOptions options;
      options.lambda = *lambda;
      options.gap_k = *k;
      if (*lambda > 0.0) {
        if (targets->empty()) throw std::invalid_argument("train --lambda > 0 needs --targets");
        target_matrix = io::read_matrix(*targets);
        options.ensemble_targets = &*target_matrix;
      }
      const TrainResult result = train(config, data.train, data.val, options);
      const auto& h = result.history;
      const fs::path dir(*out_dir);
      fs::create_directories(dir);
      json checkpoints = json::array();
      for (const auto& [epoch, net] : h.checkpoints) {
        io::write_checkpoint(dir / epoch_dir(epoch), net, info_of(h, epoch));
        checkpoints.push_back(epoch);
      }
      const std::size_t peak = h.peak_epoch();
      const std::size_t last = h.final_epoch();
      io::write_checkpoint(dir / "peak", h.checkpoint(peak), info_of(h, peak));
      io::write_checkpoint(dir / "final", result.network, info_of(h, last));

      json epochs = json::array();
      for (const auto& r : h.epochs) {
        epochs.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_gap", r.val_gap}});
      }
      const json history = {{"config", config},
                            {"lambda", *lambda},
                            {"epochs", epochs},
                            {"peak_epoch", peak},
                            {"final_epoch", last},
                            {"checkpoints", checkpoints}};
      io::write_file_atomic(dir / "history.json", history.dump(2) + "\n");
      emit({{"peak_epoch", peak},
            {"peak_val_gap", h.record(peak).val_gap},
            {"final_epoch", last},
            {"final_val_gap", h.record(last).val_gap},
            {"out_dir", dir.string()}});
    };
  });
}

void Runner::add_predict(CLI::App& app) {
  auto* sub = app.add_subcommand("predict", "run a checkpoint over a feature matrix");
  auto checkpoint = std::make_shared<std::string>();
  auto features = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto batch = std::make_shared<std::size_t>(256);
  auto sel = std::make_shared<RowSelection>();
  sub->add_option("--checkpoint", *checkpoint)->required();
  sub->add_option("--features", *features)->required();
  sub->add_option("--out", *out)->required();
  sub->add_option("--batch", *batch)->check(CLI::PositiveNumber);
  sel->attach(sub);
  sub->callback([=, this] {
    action_ = [=, this] {
      const Network net = io::read_checkpoint(*checkpoint);
      const MatrixF x = load_features(*features, *sel);
      if (x.cols() != net.config.input_dim) {
        throw DimensionError("features have " + std::to_string(x.cols()) + " columns, network expects " +
                             std::to_string(net.config.input_dim));
      }
      const PredictionMatrix p = predict(net, x, *batch);
      io::write_predictions(*out, p);
      emit({{"videos", p.num_videos()}, {"classes", p.num_classes()}, {"out", *out}});
    };
  });
}

void Runner::add_gap(CLI::App& app) {
  auto* sub = app.add_subcommand("gap", "global average precision of a prediction matrix");
  auto pred = std::make_shared<std::string>();
  auto labels = std::make_shared<std::string>();
  auto k = std::make_shared<std::size_t>(kDefaultTopK);
  auto sel = std::make_shared<RowSelection>();
  sub->add_option("--pred", *pred)->required();
  sub->add_option("--labels", *labels)->required();
  sub->add_option("--k", *k)->check(CLI::PositiveNumber);
  sel->attach(sub);
  sub->callback([=, this] {
    action_ = [=, this] {
      const PredictionMatrix p = io::read_predictions(*pred);
      const LabelSet l = load_labels(*labels, *sel);
      check_aligned(p, l, *pred);
      emit({{"gap", gap_at_k(p, l, *k)}, {"k", *k}, {"videos", p.num_videos()}});
    };
  });
}

void Runner::add_ensemble(CLI::App& app) {
  auto* sub = app.add_subcommand("ensemble", "average member predictions");
  auto preds = std::make_shared<std::vector<std::string>>();
  auto out = std::make_shared<std::string>();
  auto labels = std::make_shared<std::string>();
  auto k = std::make_shared<std::size_t>(kDefaultTopK);
  auto sel = std::make_shared<RowSelection>();
  sub->add_option("--preds", *preds)->required()->expected(1, -1);
  sub->add_option("--out", *out)->required();
  sub->add_option("--labels", *labels, "also report member and ensemble GAP");
  sub->add_option("--k", *k)->check(CLI::PositiveNumber);
  sel->attach(sub);
  sub->callback([=, this] {
    action_ = [=, this] {
      const auto members = load_predictions(*preds);
      const PredictionMatrix combined = average(members);
      io::write_predictions(*out, combined);
      json report = {{"members", members.size()},
                     {"videos", combined.num_videos()},
                     {"classes", combined.num_classes()},
                     {"out", *out}};
      if (!labels->empty()) {
        const LabelSet l = load_labels(*labels, *sel);
        std::vector<double> gaps;
        for (std::size_t i = 0; i < members.size(); ++i) {
          check_aligned(members[i], l, (*preds)[i]);
          gaps.push_back(gap_at_k(members[i], l, *k));
        }
        double mean = 0.0;
        for (double g : gaps) mean += g;
        mean /= static_cast<double>(gaps.size());
        report["member_gaps"] = gaps;
        report["mean_member_gap"] = mean;
        report["best_member_gap"] = *std::max_element(gaps.begin(), gaps.end());
        report["gap"] = gap_at_k(combined, l, *k);
      }
      emit(report);
    };
  });
}

void Runner::add_sweep(CLI::App& app) {
  auto* sub = app.add_subcommand("sweep", "GAP over convex combinations alpha*A + (1-alpha)*B");
  auto a = std::make_shared<std::string>();
  auto b = std::make_shared<std::string>();
  auto labels = std::make_shared<std::string>();
  auto step = std::make_shared<double>(kDefaultSweepStep);
  auto k = std::make_shared<std::size_t>(kDefaultTopK);
  auto out = std::make_shared<std::string>();
  auto sel = std::make_shared<RowSelection>();
  sub->add_option("--a", *a)->required();
  sub->add_option("--b", *b)->required();
  sub->add_option("--labels", *labels)->required();
  sub->add_option("--step", *step);
  sub->add_option("--k", *k)->check(CLI::PositiveNumber);
  sub->add_option("--out", *out, "curve CSV");
  sel->attach(sub);
  sub->callback([=, this] {
    action_ = [=, this] {
      const PredictionMatrix pa = io::read_predictions(*a);
      const PredictionMatrix pb = io::read_predictions(*b);
      const LabelSet l = load_labels(*labels, *sel);
      check_aligned(pa, l, *a);
      check_aligned(pb, l, *b);
      const SweepResult r = alpha_sweep(pa, pb, l, *step, *k);
      std::string csv = "alpha,gap\n";
      json curve = json::array();
      for (const auto& p : r.grid) {
        csv += fmt(p.alpha) + "," + fmt(p.gap) + "\n";
        curve.push_back({{"alpha", p.alpha}, {"gap", p.gap}});
      }
      if (!out->empty()) io::write_file_atomic(*out, csv);
      const double gap_b = r.grid.front().gap;
      const double gap_a = r.grid.back().gap;
      emit({{"best_alpha", r.best_alpha},
            {"best_gap", r.best_gap},
            {"gap_a", gap_a},
            {"gap_b", gap_b},
            {"interior", r.best_alpha > 0.0 && r.best_alpha < 1.0},
            {"curve", curve}});
    };
  });
}

void Runner::add_diversity(CLI::App& app) {
  auto* sub = app.add_subcommand("diversity", "pairwise Pearson diversity and ensemble gains");
  auto preds = std::make_shared<std::vector<std::string>>();
  auto labels = std::make_shared<std::string>();
  auto k = std::make_shared<std::size_t>(kDefaultTopK);
  auto out_dir = std::make_shared<std::string>();
  auto sel = std::make_shared<RowSelection>();
  sub->add_option("--preds", *preds)->required()->expected(2, -1);
  sub->add_option("--labels", *labels, "adds the pair gain matrix and scatter");
  sub->add_option("--k", *k)->check(CLI::PositiveNumber);
  sub->add_option("--out-dir", *out_dir, "writes diversity.csv, gain.csv and scatter.csv");
  sel->attach(sub);
  sub->callback([=, this] {
    action_ = [=, this] {
      const auto members = load_predictions(*preds);
      const MatrixD div = diversity_matrix(members);
      json report = {{"members", members.size()},
                     {"mean_diversity", mean_pairwise_diversity(members)},
                     {"diversity", matrix_json(div)}};
      const fs::path dir(*out_dir);
      if (!out_dir->empty()) io::write_file_atomic(dir / "diversity.csv", matrix_csv(div));
      if (!labels->empty()) {
        const LabelSet l = load_labels(*labels, *sel);
        for (std::size_t i = 0; i < members.size(); ++i) check_aligned(members[i], l, (*preds)[i]);
        const MatrixD gain = pair_gain_matrix(members, l, *k);
        const auto corr = diversity_gain_from_matrices(div, gain);
        report["gain"] = matrix_json(gain);
        report["spearman"] = optional_json(corr.spearman);
        report["pearson"] = optional_json(corr.pearson);
        if (!out_dir->empty()) {
          io::write_file_atomic(dir / "gain.csv", matrix_csv(gain));
          std::string scatter = "i,j,diversity,gain\n";
          for (const auto& p : corr.points) {
            scatter += std::to_string(p.i) + "," + std::to_string(p.j) + "," + fmt(p.diversity) + "," +
                       fmt(p.gain) + "\n";
          }
          io::write_file_atomic(dir / "scatter.csv", scatter);
        }
      }
      emit(report);
    };
  });
}

void Runner::add_wrongsets(CLI::App& app) {
  auto* sub = app.add_subcommand("wrongsets", "intersection/union of wrong-example sets as members join");
  auto preds = std::make_shared<std::vector<std::string>>();
  auto labels = std::make_shared<std::string>();
  auto theta = std::make_shared<double>(kDefaultWrongTheta);
  auto out = std::make_shared<std::string>();
  auto sel = std::make_shared<RowSelection>();
  sub->add_option("--preds", *preds)->required()->expected(1, -1);
  sub->add_option("--labels", *labels)->required();
  sub->add_option("--theta", *theta);
  sub->add_option("--out", *out, "trajectory CSV");
  sel->attach(sub);
  sub->callback([=, this] {
    action_ = [=, this] {
      const auto members = load_predictions(*preds);
      const LabelSet l = load_labels(*labels, *sel);
      for (std::size_t i = 0; i < members.size(); ++i) check_aligned(members[i], l, (*preds)[i]);
      const Trajectory t = wrongset_trajectory(members, l, *theta);
      std::string csv = "ensemble_size,intersection_size,union_size\n";
      json steps = json::array();
      for (const auto& s : t.steps) {
        csv += std::to_string(s.ensemble_size) + "," + std::to_string(s.intersection_size) + "," +
               std::to_string(s.union_size) + "\n";
        steps.push_back({{"ensemble_size", s.ensemble_size},
                         {"intersection_size", s.intersection_size},
                         {"union_size", s.union_size}});
      }
      if (!out->empty()) io::write_file_atomic(*out, csv);
      emit({{"theta", *theta}, {"steps", steps}});
    };
  });
}

void Runner::add_histshift(CLI::App& app) {
  auto* sub = app.add_subcommand("histshift", "error histograms of base-ensemble mistakes before and after");
  auto base = std::make_shared<std::vector<std::string>>();
  auto extended = std::make_shared<std::vector<std::string>>();
  auto labels = std::make_shared<std::string>();
  auto theta = std::make_shared<double>(kDefaultWrongTheta);
  auto bins = std::make_shared<std::size_t>(kDefaultHistogramBins);
  auto out = std::make_shared<std::string>();
  auto sel = std::make_shared<RowSelection>();
  sub->add_option("--base", *base, "combined base ensemble, or its member files")->required()->expected(1, -1);
  sub->add_option("--extended", *extended, "combined extended ensemble, or its member files")
      ->required()
      ->expected(1, -1);
  sub->add_option("--labels", *labels)->required();
  sub->add_option("--theta", *theta);
  sub->add_option("--bins", *bins)->check(CLI::PositiveNumber);
  sub->add_option("--out", *out, "histogram CSV");
  sel->attach(sub);
  sub->callback([=, this] {
    action_ = [=, this] {
      const LabelSet l = load_labels(*labels, *sel);
      auto records = [&](const std::vector<std::string>& paths) {
        std::vector<ClassifierRecord> recs;
        for (const auto& p : paths) {
          ClassifierRecord r{fs::weakly_canonical(p).string(), FeatureTag::kExternal, {}, 0.0,
                             CheckpointTag::final_epoch(), io::read_predictions(p)};
          check_aligned(r.predictions, l, p);
          recs.push_back(std::move(r));
        }
        return recs;
      };
      const Ensemble eb(records(*base));
      const Ensemble ee(records(*extended));
      // Member lists go through the containment check; single files are
      // taken as already-combined outputs.
      const ErrorHistogramShift h =
          extended->size() > 1 ? error_histogram_shift(eb, ee, l, *theta, *bins)
                               : error_histogram_shift(eb.combined(), ee.combined(), l, *theta, *bins);
      std::string csv =
          "bin_low,bin_high,base,extended,base_positive,extended_positive,base_negative,extended_negative\n";
      for (std::size_t i = 0; i < h.bins; ++i) {
        const double lo = static_cast<double>(i) / static_cast<double>(h.bins);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(h.bins);
        csv += fmt(lo) + "," + fmt(hi) + "," + std::to_string(h.base_hist[i]) + "," +
               std::to_string(h.extended_hist[i]) + "," + std::to_string(h.base_hist_positive[i]) + "," +
               std::to_string(h.extended_hist_positive[i]) + "," + std::to_string(h.base_hist_negative[i]) +
               "," + std::to_string(h.extended_hist_negative[i]) + "\n";
      }
      if (!out->empty()) io::write_file_atomic(*out, csv);
      emit({{"theta", *theta},
            {"bins", h.bins},
            {"tracked_pairs", h.tracked_pairs},
            {"base_mean_error", h.base_mean_error},
            {"extended_mean_error", h.extended_mean_error},
            {"base_hist", h.base_hist},
            {"extended_hist", h.extended_hist}});
    };
  });
}

void Runner::add_seqbuild(CLI::App& app) {
  auto* sub = app.add_subcommand("seqbuild", "sequentially build an ensemble with the diversity-aware loss");
  auto features = std::make_shared<std::string>();
  auto labels = std::make_shared<std::string>();
  auto config_path = std::make_shared<std::string>();
  auto out_dir = std::make_shared<std::string>();
  auto size = std::make_shared<std::size_t>(kDefaultSequentialSize);
  auto lambda = std::make_shared<double>(kDefaultDiversityLambda);
  auto split = std::make_shared<std::string>();
  auto split_seed = std::make_shared<std::uint64_t>(1);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto k = std::make_shared<std::size_t>(kDefaultTopK);
  sub->add_option("--features", *features)->required();
  sub->add_option("--labels", *labels)->required();
  sub->add_option("--config", *config_path)->required();
  sub->add_option("--out-dir", *out_dir)->required();
  sub->add_option("--size", *size)->check(CLI::PositiveNumber);
  sub->add_option("--lambda", *lambda)->check(CLI::Range(0.0, 1.0));
  sub->add_option("--split", *split);
  sub->add_option("--split-seed", *split_seed);
  auto* seed_opt = sub->add_option("--seed", *seed, "overrides the config seed");
  sub->add_option("--k", *k)->check(CLI::PositiveNumber);
  sub->callback([=, this] {
    action_ = [=, this] {
      NetworkConfig config = read_network_config(*config_path);
      if (seed_opt->count()) config.seed = *seed;
      const TrainValData data = load_train_val(*features, *labels, *split, *split_seed, 0.8);
      bind_config(config, data.train.features, data.train.labels);
      const SequentialBuild build = sequential_diverse_build(data.train, data.val, config, *size, *lambda);
      const fs::path dir(*out_dir);
      fs::create_directories(dir);
      const auto preds = predictions_of(build.ensemble.members());
      std::vector<double> gaps;
      for (std::size_t i = 0; i < preds.size(); ++i) {
        io::write_predictions(dir / ("member_" + std::to_string(i) + ".divm"), preds[i]);
        gaps.push_back(gap_at_k(preds[i], data.val.labels, *k));
      }
      io::write_predictions(dir / "ensemble.divm", build.ensemble.combined());
      json report = {{"lambda", *lambda},
                     {"size", preds.size()},
                     {"member_gaps", gaps},
                     {"ensemble_gap", gap_at_k(build.ensemble.combined(), data.val.labels, *k)},
                     {"out_dir", dir.string()}};
      report["mean_diversity"] = preds.size() > 1 ? json(mean_pairwise_diversity(preds)) : json(nullptr);
      io::write_file_atomic(dir / "report.json", report.dump(2) + "\n");
      emit(report);
    };
  });
}

int Runner::run(const std::vector<std::string>& args) {
  CLI::App app{"divens: ensemble diversity experiments for multi-label video classification", "divens"};
  app.add_flag("-q,--quiet", quiet_, "suppress JSON on stdout");
  app.require_subcommand(1);
  add_synth(app);
  add_pool(app);
  add_codebook(app);
  add_pca(app);
  add_train(app);
  add_predict(app);
  add_gap(app);
  add_ensemble(app);
  add_sweep(app);
  add_diversity(app);
  add_wrongsets(app);
  add_histshift(app);
  add_seqbuild(app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out_, err_);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (action_) action_();
    return kExitOk;
  } catch (const FormatError& e) {
    err_ << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const DimensionError& e) {
    err_ << "error: dimension mismatch: " << e.what() << "\n";
    return kExitDimension;
  } catch (const TrainingDivergedError& e) {
    err_ << "error: " << e.what() << " at epoch " << e.epoch() << "\n";
    return kExitDivergence;
  } catch (const DivergenceError& e) {
    err_ << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const json::exception& e) {
    err_ << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const std::invalid_argument& e) {
    err_ << "error: " << e.what() << "\n";
    return kExitInvalidArgument;
  } catch (const std::exception& e) {
    err_ << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Runner runner(out, err);
  return runner.run(args);
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace divens::cli
