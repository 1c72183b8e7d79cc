#include "fired/core.hpp"

#include "fired/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace fired {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonUniformSpacing: return "NonUniformSpacing";
    case ErrorCode::NonBinaryLabel: return "NonBinaryLabel";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::RowCountMismatch: return "RowCountMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::AllFiltered: return "AllFiltered";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::MissingRank: return "MissingRank";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

void check_spacing(const std::vector<Timestamp>& ts, std::int64_t interval) {
  if (interval <= 0) {
    throw Error(ErrorCode::NonUniformSpacing, "interval must be positive");
  }
  for (std::size_t t = 1; t < ts.size(); ++t) {
    if (ts[t] - ts[t - 1] != interval) {
      throw Error(ErrorCode::NonUniformSpacing,
                  "timestamps " + std::to_string(ts[t - 1]) + " and " + std::to_string(ts[t]) +
                      " are not " + std::to_string(interval) + "s apart");
    }
  }
}

}  // namespace

MetricFrame::MetricFrame(std::vector<Timestamp> timestamps, Eigen::MatrixXd values,
                         std::vector<std::string> names, std::int64_t interval)
    : timestamps_(std::move(timestamps)),
      values_(std::move(values)),
      names_(std::move(names)),
      interval_(interval) {
  if (static_cast<Index>(timestamps_.size()) != values_.rows()) {
    throw Error(ErrorCode::RowCountMismatch, "timestamp count differs from row count");
  }
  if (static_cast<Index>(names_.size()) != values_.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "name count differs from column count");
  }
  check_spacing(timestamps_, interval_);
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw Error(ErrorCode::DuplicateName, "metric '" + n + "'");
  }
  for (Index c = 0; c < values_.cols(); ++c) {
    for (Index r = 0; r < values_.rows(); ++r) {
      if (!std::isfinite(values_(r, c))) {
        throw Error(ErrorCode::NonFiniteValue, "row " + std::to_string(r) + ", column '" +
                                                   names_[static_cast<std::size_t>(c)] + "'");
      }
    }
  }
}

std::optional<Index> MetricFrame::column(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<Index>(it - names_.begin());
}

MetricFrame MetricFrame::slice(Index begin, Index end) const {
  begin = std::clamp<Index>(begin, 0, rows());
  end = std::clamp<Index>(end, begin, rows());
  return MetricFrame({timestamps_.begin() + begin, timestamps_.begin() + end},
                     values_.middleRows(begin, end - begin), names_, interval_);
}

MetricFrame MetricFrame::select_columns(std::span<const Index> columns) const {
  Eigen::MatrixXd v(rows(), static_cast<Index>(columns.size()));
  std::vector<std::string> n;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    v.col(static_cast<Index>(j)) = values_.col(columns[j]);
    n.push_back(names_[static_cast<std::size_t>(columns[j])]);
  }
  return MetricFrame(timestamps_, std::move(v), std::move(n), interval_);
}

bool operator==(const MetricFrame& a, const MetricFrame& b) {
  return a.timestamps_ == b.timestamps_ && a.names_ == b.names_ && a.interval_ == b.interval_ &&
         a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
         a.values_ == b.values_;
}

LabelSeries::LabelSeries(std::vector<Timestamp> timestamps, std::vector<std::uint8_t> labels)
    : timestamps_(std::move(timestamps)), labels_(std::move(labels)) {
  if (timestamps_.size() != labels_.size()) {
    throw Error(ErrorCode::RowCountMismatch, "timestamp count differs from label count");
  }
  for (std::size_t t = 0; t < labels_.size(); ++t) {
    if (labels_[t] > 1) {
      throw Error(ErrorCode::NonBinaryLabel, "label " + std::to_string(labels_[t]) + " at row " +
                                                 std::to_string(t));
    }
    if (t > 0 && timestamps_[t] <= timestamps_[t - 1]) {
      throw Error(ErrorCode::NonUniformSpacing, "label timestamps must increase");
    }
  }
}

Eigen::VectorXd LabelSeries::as_vector() const {
  Eigen::VectorXd v(size());
  for (Index i = 0; i < size(); ++i) v(i) = labels_[static_cast<std::size_t>(i)];
  return v;
}

std::size_t LabelSeries::positives() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), std::uint8_t{1}));
}

LabelSeries LabelSeries::slice(Index begin, Index end) const {
  begin = std::clamp<Index>(begin, 0, size());
  end = std::clamp<Index>(end, begin, size());
  return LabelSeries({timestamps_.begin() + begin, timestamps_.begin() + end},
                     {labels_.begin() + begin, labels_.begin() + end});
}

std::string to_string(SelectionMethod method) {
  switch (method) {
    case SelectionMethod::None: return "none";
    case SelectionMethod::Correlation: return "correlation";
    case SelectionMethod::Pca: return "pca";
  }
  return "none";
}

SelectionMethod selection_method_from_string(const std::string& s) {
  if (s == "none") return SelectionMethod::None;
  if (s == "correlation") return SelectionMethod::Correlation;
  if (s == "pca") return SelectionMethod::Pca;
  throw Error(ErrorCode::InvalidConfig, "unknown selection method '" + s + "'");
}

namespace {

template <typename A, typename B>
bool same_dense(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace

bool operator==(const SelectedFrame& a, const SelectedFrame& b) {
  return a.method == b.method && a.timestamps == b.timestamps && a.names == b.names &&
         a.retained == b.retained && same_dense(a.values, b.values) &&
         same_dense(a.projection, b.projection) && same_dense(a.means, b.means) &&
         same_dense(a.stds, b.stds);
}

void DiagnosisReport::validate() const {
  if (verdicts.size() != probabilities.size() || verdicts.size() != timestamps.size()) {
    throw Error(ErrorCode::LengthMismatch, "report vectors differ in length");
  }
  for (std::size_t t = 0; t < verdicts.size(); ++t) {
    const double p = probabilities[t];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "probability outside [0,1] at row " + std::to_string(t));
    }
    if ((p >= threshold) != (verdicts[t] == 1)) {
      throw Error(ErrorCode::InvalidConfig, "verdict disagrees with threshold at row " +
                                                std::to_string(t));
    }
  }
}

std::pair<MetricFrame, LabelSeries> align(const MetricFrame& frame, const LabelSeries& labels) {
  if (frame.rows() == 0 || labels.size() == 0) {
    throw Error(ErrorCode::EmptyIntersection, "empty input");
  }
  const auto& ft = frame.timestamps();
  const auto& lt = labels.timestamps();
  std::vector<Index> rows;
  std::vector<Timestamp> ts;
  std::vector<std::uint8_t> lab;
  std::size_t i = 0, j = 0;
  while (i < ft.size() && j < lt.size()) {
    if (ft[i] < lt[j]) {
      ++i;
    } else if (lt[j] < ft[i]) {
      ++j;
    } else {
      rows.push_back(static_cast<Index>(i));
      ts.push_back(ft[i]);
      lab.push_back(labels.labels()[j]);
      ++i;
      ++j;
    }
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyIntersection, "no common timestamps");
  if (rows.size() == ft.size() && ts.size() == lt.size()) return {frame, labels};

  Eigen::MatrixXd v(static_cast<Index>(rows.size()), frame.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) v.row(static_cast<Index>(r)) = frame.values().row(rows[r]);
  const std::int64_t interval = ts.size() >= 2 ? ts[1] - ts[0] : frame.interval();
  MetricFrame f(ts, std::move(v), frame.names(), interval);
  return {std::move(f), LabelSeries(std::move(ts), std::move(lab))};
}

}  // namespace fired
