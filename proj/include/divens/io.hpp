#pragma once

// On-disk formats.
//
//   Matrix file:  "DIVM" | u32 version = 1 | u64 rows | u64 cols |
//                 rows*cols f32, row-major. All little-endian.
//   Frame file:   "DIVF" | u32 version = 1 | records until EOF, each
//                 u16 id_len | id bytes | u32 T | u32 d | T*d f32.
//   Label file:   "#classes=<C>" then one "video_id,c1 c2 ..." line per
//                 video, class ids strictly ascending.
//
// Every writer goes through a temporary file renamed into place on success.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "divens/core.hpp"
#include "divens/mlp.hpp"
#include "divens/pooling.hpp"
#include "divens/synth.hpp"

namespace divens::io {

inline constexpr std::uint32_t kFormatVersion = 1;

std::string encode_matrix(const MatrixF& m);
// Throws FormatError naming the byte offset of the problem.
MatrixF decode_matrix(std::string_view bytes);

void write_matrix(const std::filesystem::path& path, const MatrixF& m);
MatrixF read_matrix(const std::filesystem::path& path);

void write_predictions(const std::filesystem::path& path, const PredictionMatrix& p);
PredictionMatrix read_predictions(const std::filesystem::path& path);

std::string encode_frames(std::span<const FrameSequence> videos);
std::vector<FrameSequence> decode_frames(std::string_view bytes);
void write_frames(const std::filesystem::path& path, std::span<const FrameSequence> videos);
std::vector<FrameSequence> read_frames(const std::filesystem::path& path);

struct LabelFile {
  std::vector<std::string> video_ids;
  LabelSet labels;
};

std::string encode_labels(std::span<const std::string> video_ids, const LabelSet& labels);
// Throws FormatError naming the 1-based line of the problem.
LabelFile decode_labels(std::string_view text);
void write_labels(const std::filesystem::path& path, std::span<const std::string> video_ids,
                  const LabelSet& labels);
LabelFile read_labels(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// {"train": [...], "validation": [...]}
void write_split(const std::filesystem::path& path, const Split& split);
Split read_split(const std::filesystem::path& path);

// Matrix file plus "<path>.json" sidecar. The whitening model is stored as a
// (d + 2) x d matrix: row 0 mean, row 1 scale, rows 2.. the basis.
void write_codebook(const std::filesystem::path& path, const Codebook& codebook);
Codebook read_codebook(const std::filesystem::path& path);
void write_whitening(const std::filesystem::path& path, const PcaWhitenModel& model, double eps);
PcaWhitenModel read_whitening(const std::filesystem::path& path);

// A checkpoint is a directory: layer<i>_weights.divm, layer<i>_bias.divm and
// manifest.json holding the config, epoch and metrics.
struct CheckpointInfo {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_gap = 0.0;
};

void write_checkpoint(const std::filesystem::path& dir, const Network& net, const CheckpointInfo& info);
Network read_checkpoint(const std::filesystem::path& dir);

}  // namespace divens::io
