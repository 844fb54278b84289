#pragma once

// Domain types shared by every module: dense matrices, prediction matrices,
// sparse label sets, frame sequences and classifier records.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace divens {

using ClassId = std::uint32_t;

// Error categories. The CLI maps each to a distinct exit status.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Row-major dense matrix.
template <typename T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix payload size " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  // Copies the given rows, in order, into a new matrix.
  DenseMatrix select_rows(std::span<const std::size_t> indices) const {
    DenseMatrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const auto src = row(indices[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using MatrixF = DenseMatrix<float>;
using MatrixD = DenseMatrix<double>;

// Per-video, per-class confidences. Values are not range-checked here; see
// validate_aligned.
class PredictionMatrix {
 public:
  PredictionMatrix(std::size_t num_videos, std::size_t num_classes, float fill = 0.0f);
  PredictionMatrix(std::size_t num_videos, std::size_t num_classes, std::vector<float> values);
  explicit PredictionMatrix(MatrixF values);

  std::size_t num_videos() const { return values_.rows(); }
  std::size_t num_classes() const { return values_.cols(); }

  float operator()(std::size_t v, std::size_t c) const { return values_(v, c); }
  float& operator()(std::size_t v, std::size_t c) { return values_(v, c); }
  std::span<const float> row(std::size_t v) const { return values_.row(v); }
  std::span<float> row(std::size_t v) { return values_.row(v); }
  std::span<const float> values() const { return values_.values(); }
  std::span<float> values() { return values_.values(); }
  const MatrixF& matrix() const { return values_; }

  PredictionMatrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const PredictionMatrix&, const PredictionMatrix&) = default;

 private:
  MatrixF values_;
};

// Sparse ground truth: per video, the positive class ids.
class LabelSet {
 public:
  LabelSet(std::size_t num_classes, std::vector<std::vector<ClassId>> positives);

  std::size_t num_videos() const { return positives_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  std::span<const ClassId> positives(std::size_t v) const { return positives_[v]; }
  std::size_t total_positives() const;

  // Requires the sorted invariant.
  bool is_positive(std::size_t v, ClassId c) const;

  // Dense 0/1 rows for the given videos (all videos when indices is empty).
  MatrixF dense(std::span<const std::size_t> indices = {}) const;
  LabelSet select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::size_t num_classes_;
  std::vector<std::vector<ClassId>> positives_;
};

// Frame-level descriptors of one video, T x d.
class FrameSequence {
 public:
  static constexpr std::size_t kMaxFrames = 300;

  FrameSequence(std::string video_id, MatrixF frames);

  const std::string& video_id() const { return video_id_; }
  std::size_t num_frames() const { return frames_.rows(); }
  std::size_t dim() const { return frames_.cols(); }
  std::span<const float> frame(std::size_t t) const { return frames_.row(t); }
  const MatrixF& frames() const { return frames_; }

 private:
  std::string video_id_;
  MatrixF frames_;
};

enum class FeatureTag { kMean, kMeanStd, kRoi, kBow, kExternal };

struct CheckpointTag {
  enum class Kind { kPeak, kFinal, kEpoch };
  Kind kind = Kind::kFinal;
  std::size_t epoch = 0;

  static CheckpointTag peak() { return {Kind::kPeak, 0}; }
  static CheckpointTag final_epoch() { return {Kind::kFinal, 0}; }
  static CheckpointTag at_epoch(std::size_t n) { return {Kind::kEpoch, n}; }
  std::string to_string() const;
  friend bool operator==(const CheckpointTag&, const CheckpointTag&) = default;
};

std::string to_string(FeatureTag tag);
FeatureTag feature_tag_from_string(const std::string& s);

struct ClassifierRecord {
  std::string id;
  FeatureTag feature_tag = FeatureTag::kExternal;
  std::vector<std::size_t> arch;
  double dropout = 0.0;
  CheckpointTag checkpoint = CheckpointTag::final_epoch();
  PredictionMatrix predictions;
};

struct Violation {
  enum class Kind { kDimension, kRange, kLabelOrder, kLabelRange };
  Kind kind;
  std::string message;
  std::optional<std::size_t> row;
  std::optional<std::size_t> col;
};

struct ValidationReport {
  // At most kMaxRecorded violations are stored; total_violations counts all.
  static constexpr std::size_t kMaxRecorded = 64;

  std::vector<Violation> violations;
  std::size_t total_violations = 0;

  bool ok() const { return total_violations == 0; }
  bool has_dimension_mismatch() const;
  std::string summary() const;
  void add(Violation v);
};

ValidationReport validate_aligned(const PredictionMatrix& preds, const LabelSet& labels);

// Throws DimensionError on a dimension mismatch and std::invalid_argument on
// any other violation.
void require_aligned(const PredictionMatrix& preds, const LabelSet& labels);

}  // namespace divens
