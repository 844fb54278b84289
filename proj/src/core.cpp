#include "divens/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace divens {

namespace {

void require_positive_dims(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("prediction matrix dimensions must be positive, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

PredictionMatrix::PredictionMatrix(std::size_t num_videos, std::size_t num_classes, float fill)
    : values_(num_videos, num_classes, fill) {
  require_positive_dims(num_videos, num_classes);
}

PredictionMatrix::PredictionMatrix(std::size_t num_videos, std::size_t num_classes,
                                   std::vector<float> values)
    : values_(num_videos, num_classes, std::move(values)) {
  require_positive_dims(num_videos, num_classes);
}

PredictionMatrix::PredictionMatrix(MatrixF values) : values_(std::move(values)) {
  require_positive_dims(values_.rows(), values_.cols());
}

PredictionMatrix PredictionMatrix::select_rows(std::span<const std::size_t> indices) const {
  return PredictionMatrix(values_.select_rows(indices));
}

LabelSet::LabelSet(std::size_t num_classes, std::vector<std::vector<ClassId>> positives)
    : num_classes_(num_classes), positives_(std::move(positives)) {
  if (num_classes_ == 0) throw std::invalid_argument("label set needs at least one class");
}

std::size_t LabelSet::total_positives() const {
  std::size_t n = 0;
  for (const auto& p : positives_) n += p.size();
  return n;
}

bool LabelSet::is_positive(std::size_t v, ClassId c) const {
  const auto& p = positives_[v];
  return std::binary_search(p.begin(), p.end(), c);
}

MatrixF LabelSet::dense(std::span<const std::size_t> indices) const {
  const std::size_t n = indices.empty() ? num_videos() : indices.size();
  MatrixF out(n, num_classes_, 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t v = indices.empty() ? i : indices[i];
    for (ClassId c : positives_[v]) out(i, c) = 1.0f;
  }
  return out;
}

LabelSet LabelSet::select_rows(std::span<const std::size_t> indices) const {
  std::vector<std::vector<ClassId>> picked;
  picked.reserve(indices.size());
  for (std::size_t v : indices) picked.push_back(positives_[v]);
  return LabelSet(num_classes_, std::move(picked));
}

FrameSequence::FrameSequence(std::string video_id, MatrixF frames)
    : video_id_(std::move(video_id)), frames_(std::move(frames)) {
  if (frames_.rows() == 0) throw std::invalid_argument("video '" + video_id_ + "' has no frames");
  if (frames_.rows() > kMaxFrames) {
    throw std::invalid_argument("video '" + video_id_ + "' has " + std::to_string(frames_.rows()) +
                                " frames, limit is " + std::to_string(kMaxFrames));
  }
  if (frames_.cols() == 0) throw std::invalid_argument("video '" + video_id_ + "' has dim 0");
  for (float x : frames_.values()) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument("video '" + video_id_ + "' has a non-finite frame value");
    }
  }
}

std::string CheckpointTag::to_string() const {
  switch (kind) {
    case Kind::kPeak:
      return "peak";
    case Kind::kFinal:
      return "final";
    case Kind::kEpoch:
      return "epoch(" + std::to_string(epoch) + ")";
  }
  return "final";
}

std::string to_string(FeatureTag tag) {
  switch (tag) {
    case FeatureTag::kMean:
      return "mean";
    case FeatureTag::kMeanStd:
      return "mean_std";
    case FeatureTag::kRoi:
      return "roi";
    case FeatureTag::kBow:
      return "bow";
    case FeatureTag::kExternal:
      return "external";
  }
  return "external";
}

FeatureTag feature_tag_from_string(const std::string& s) {
  if (s == "mean") return FeatureTag::kMean;
  if (s == "mean_std" || s == "meanstd") return FeatureTag::kMeanStd;
  if (s == "roi") return FeatureTag::kRoi;
  if (s == "bow") return FeatureTag::kBow;
  if (s == "external") return FeatureTag::kExternal;
  throw std::invalid_argument("unknown feature tag '" + s + "'");
}

bool ValidationReport::has_dimension_mismatch() const {
  return std::any_of(violations.begin(), violations.end(),
                     [](const Violation& v) { return v.kind == Violation::Kind::kDimension; });
}

void ValidationReport::add(Violation v) {
  ++total_violations;
  if (violations.size() < kMaxRecorded) violations.push_back(std::move(v));
}

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream os;
  os << total_violations << " violation(s)";
  for (const auto& v : violations) os << "; " << v.message;
  if (total_violations > violations.size()) os << "; ...";
  return os.str();
}

ValidationReport validate_aligned(const PredictionMatrix& preds, const LabelSet& labels) {
  ValidationReport report;
  if (preds.num_videos() != labels.num_videos()) {
    report.add({Violation::Kind::kDimension,
                "num_videos " + std::to_string(preds.num_videos()) + "≠" +
                    std::to_string(labels.num_videos()),
                std::nullopt, std::nullopt});
  }
  if (preds.num_classes() != labels.num_classes()) {
    report.add({Violation::Kind::kDimension,
                "num_classes " + std::to_string(preds.num_classes()) + "≠" +
                    std::to_string(labels.num_classes()),
                std::nullopt, std::nullopt});
  }

  for (std::size_t v = 0; v < preds.num_videos(); ++v) {
    const auto row = preds.row(v);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const float x = row[c];
      // Written so that NaN also fails.
      if (!(x >= 0.0f && x <= 1.0f)) {
        std::ostringstream os;
        os << "confidence " << x << " out of [0,1] at (" << v << "," << c << ")";
        report.add({Violation::Kind::kRange, os.str(), v, c});
      }
    }
  }

  for (std::size_t v = 0; v < labels.num_videos(); ++v) {
    const auto pos = labels.positives(v);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      if (pos[i] >= labels.num_classes()) {
        report.add({Violation::Kind::kLabelRange,
                    "class id " + std::to_string(pos[i]) + " >= num_classes " +
                        std::to_string(labels.num_classes()) + " for video " + std::to_string(v),
                    v, pos[i]});
      }
      if (i > 0 && pos[i] <= pos[i - 1]) {
        report.add({Violation::Kind::kLabelOrder,
                    "labels of video " + std::to_string(v) + " not strictly ascending at position " +
                        std::to_string(i),
                    v, std::nullopt});
      }
    }
  }
  return report;
}

void require_aligned(const PredictionMatrix& preds, const LabelSet& labels) {
  const auto report = validate_aligned(preds, labels);
  if (report.ok()) return;
  if (report.has_dimension_mismatch()) throw DimensionError(report.summary());
  throw std::invalid_argument(report.summary());
}

}  // namespace divens
