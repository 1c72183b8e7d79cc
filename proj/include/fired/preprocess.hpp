#pragma once

#include "fired/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fired {

struct ZScoreStats {
  std::vector<std::string> names;  // retained columns, in order
  Eigen::RowVectorXd means;
  Eigen::RowVectorXd stds;
  std::vector<std::string> dropped;  // constant columns
  std::vector<std::string> warnings;
};

/// Population z-score per column. Constant columns are dropped and reported.
std::pair<MetricFrame, ZScoreStats> zscore(const MetricFrame& frame);

/// Two-sided p-value of Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

struct CorrelationResult {
  std::vector<std::string> names;
  std::vector<double> r;
  std::vector<double> t;  // +-inf when |r| == 1
  std::vector<double> p;
  std::vector<bool> retained;
};

struct CorrelationOptions {
  double r_min = 0.5;
  double p_max = 0.05;
};

/// Pearson filter against the labels. Throws AllFiltered when nothing passes.
std::pair<SelectedFrame, CorrelationResult> correlate_select(const MetricFrame& frame,
                                                             const LabelSeries& labels,
                                                             CorrelationOptions options = {});

/// Correlation statistics only, without applying the filter.
CorrelationResult correlate(const MetricFrame& frame, const LabelSeries& labels,
                            CorrelationOptions options = {});

/// Applies a retained-column list to a frame with the same metric names.
SelectedFrame select_columns(const MetricFrame& frame, const std::vector<std::string>& names);

/// `metric,r,t,p,retained`
std::string to_csv(const CorrelationResult& result);

struct PcaModel {
  std::vector<std::string> input_names;
  Eigen::RowVectorXd means;
  Eigen::RowVectorXd stds;
  Eigen::VectorXd eigenvalues;  // all of them, non-increasing
  Eigen::MatrixXd projection;   // N x n, orthonormal columns
  double retained_variance = 0.0;

  Index components() const { return projection.cols(); }
};

struct PcaOptions {
  double variance = 0.95;
  std::optional<Index> n_fixed;
};

PcaModel pca_fit(const MetricFrame& frame, PcaOptions options = {});
SelectedFrame pca_transform(const PcaModel& model, const MetricFrame& frame);
/// Maps projected rows back to the standardized input space.
Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& projected);

/// Identity selection: all columns, original identity.
SelectedFrame select_all(const MetricFrame& frame);

}  // namespace fired
