#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fired {

using Timestamp = std::int64_t;
using Index = Eigen::Index;

/// Timestamp-indexed d x N matrix of monitoring metrics. Immutable; the
/// constructor enforces the invariants (uniform spacing, finite cells,
/// unique names).
class MetricFrame {
 public:
  MetricFrame() = default;
  MetricFrame(std::vector<Timestamp> timestamps, Eigen::MatrixXd values,
              std::vector<std::string> names, std::int64_t interval);

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const std::vector<Timestamp>& timestamps() const { return timestamps_; }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& names() const { return names_; }
  std::int64_t interval() const { return interval_; }

  /// Column position of `name`, or nullopt.
  std::optional<Index> column(const std::string& name) const;

  /// Contiguous rows [begin, end).
  MetricFrame slice(Index begin, Index end) const;
  MetricFrame select_columns(std::span<const Index> columns) const;

  friend bool operator==(const MetricFrame&, const MetricFrame&);

 private:
  std::vector<Timestamp> timestamps_;
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
  std::int64_t interval_ = 1;
};

/// Binary anomaly labels aligned to timestamps.
class LabelSeries {
 public:
  LabelSeries() = default;
  LabelSeries(std::vector<Timestamp> timestamps, std::vector<std::uint8_t> labels);

  Index size() const { return static_cast<Index>(labels_.size()); }
  const std::vector<Timestamp>& timestamps() const { return timestamps_; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  Eigen::VectorXd as_vector() const;
  std::size_t positives() const;

  LabelSeries slice(Index begin, Index end) const;

  friend bool operator==(const LabelSeries&, const LabelSeries&) = default;

 private:
  std::vector<Timestamp> timestamps_;
  std::vector<std::uint8_t> labels_;
};

enum class SelectionMethod { None, Correlation, Pca };

std::string to_string(SelectionMethod method);
SelectionMethod selection_method_from_string(const std::string& s);

/// Data after metrics selection. The correlation path keeps original column
/// identity in `retained`; the PCA path records the projection and the
/// standardization it was fitted with.
struct SelectedFrame {
  SelectionMethod method = SelectionMethod::None;
  std::vector<Timestamp> timestamps;
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::vector<Index> retained;
  Eigen::MatrixXd projection;
  Eigen::RowVectorXd means;
  Eigen::RowVectorXd stds;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  friend bool operator==(const SelectedFrame&, const SelectedFrame&);
};

/// One base learner's per-timestamp anomaly scores, larger = more anomalous.
struct ScoreVector {
  std::string learner;
  Eigen::VectorXd values;

  friend bool operator==(const ScoreVector& a, const ScoreVector& b) {
    return a.learner == b.learner && a.values == b.values;
  }
};

/// d x k matrix of column-normalized base scores.
struct ScoreMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> learners;
  Eigen::RowVectorXd means;
  Eigen::RowVectorXd stds;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  friend bool operator==(const ScoreMatrix& a, const ScoreMatrix& b) {
    return a.values == b.values && a.learners == b.learners && a.means == b.means &&
           a.stds == b.stds;
  }
};

struct Evaluation {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double seconds = 0.0;

  friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

struct RankedCause {
  std::string node;
  std::size_t count = 0;
  std::size_t rank = 0;

  friend bool operator==(const RankedCause&, const RankedCause&) = default;
};

struct DiagnosisReport {
  std::vector<Timestamp> timestamps;
  std::vector<std::uint8_t> verdicts;
  std::vector<double> probabilities;
  double threshold = 0.5;
  std::optional<Evaluation> evaluation;
  std::optional<std::vector<RankedCause>> root_causes;

  /// Throws InvalidConfig when a verdict disagrees with its probability.
  void validate() const;

  friend bool operator==(const DiagnosisReport&, const DiagnosisReport&) = default;
};

/// Restricts both series to their common timestamps.
std::pair<MetricFrame, LabelSeries> align(const MetricFrame& frame, const LabelSeries& labels);

}  // namespace fired
