#include "divens/config_json.hpp"

#include <set>
#include <stdexcept>
#include <string>

namespace divens {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw std::invalid_argument(std::string(what) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const NetworkConfig& c) {
  j = {{"input_dim", c.input_dim},       {"hidden_sizes", c.hidden_sizes},
       {"num_classes", c.num_classes},   {"dropout", c.dropout},
       {"learning_rate", c.learning_rate}, {"adam_beta1", c.adam_beta1},
       {"adam_beta2", c.adam_beta2},     {"adam_eps", c.adam_eps},
       {"batch_size", c.batch_size},     {"max_epochs", c.max_epochs},
       {"seed", c.seed},                 {"checkpoint_stride", c.checkpoint_stride}};
}

void from_json(const nlohmann::json& j, NetworkConfig& c) {
  reject_unknown(j,
                 {"input_dim", "hidden_sizes", "num_classes", "dropout", "learning_rate",
                  "adam_beta1", "adam_beta2", "adam_eps", "batch_size", "max_epochs", "seed",
                  "checkpoint_stride"},
                 "network config");
  read_opt(j, "input_dim", c.input_dim);
  read_opt(j, "hidden_sizes", c.hidden_sizes);
  read_opt(j, "num_classes", c.num_classes);
  read_opt(j, "dropout", c.dropout);
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "adam_beta1", c.adam_beta1);
  read_opt(j, "adam_beta2", c.adam_beta2);
  read_opt(j, "adam_eps", c.adam_eps);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "max_epochs", c.max_epochs);
  read_opt(j, "seed", c.seed);
  read_opt(j, "checkpoint_stride", c.checkpoint_stride);
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"num_videos", c.num_videos},
       {"num_classes", c.num_classes},
       {"feature_dim", c.feature_dim},
       {"frames_min", c.frames_min},
       {"frames_max", c.frames_max},
       {"latent_rank", c.latent_rank},
       {"label_density", c.label_density},
       {"noise_sigma", c.noise_sigma},
       {"label_noise", c.label_noise},
       {"class_bias_spread", c.class_bias_spread},
       {"train_fraction", c.train_fraction},
       {"seed", c.seed},
       {"split_seed", c.split_seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  reject_unknown(j,
                 {"num_videos", "num_classes", "feature_dim", "frames_min", "frames_max",
                  "latent_rank", "label_density", "noise_sigma", "label_noise",
                  "class_bias_spread", "train_fraction", "seed", "split_seed"},
                 "synth config");
  read_opt(j, "num_videos", c.num_videos);
  read_opt(j, "num_classes", c.num_classes);
  read_opt(j, "feature_dim", c.feature_dim);
  read_opt(j, "frames_min", c.frames_min);
  read_opt(j, "frames_max", c.frames_max);
  read_opt(j, "latent_rank", c.latent_rank);
  read_opt(j, "label_density", c.label_density);
  read_opt(j, "noise_sigma", c.noise_sigma);
  read_opt(j, "label_noise", c.label_noise);
  read_opt(j, "class_bias_spread", c.class_bias_spread);
  read_opt(j, "train_fraction", c.train_fraction);
  read_opt(j, "seed", c.seed);
  read_opt(j, "split_seed", c.split_seed);
}

}  // namespace divens
