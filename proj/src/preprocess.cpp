#include "fired/preprocess.hpp"

#include "fired/error.hpp"
#include "fired/serialize.hpp"
#include "fired/stats.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <limits>
#include <numeric>

namespace fired {

std::pair<MetricFrame, ZScoreStats> zscore(const MetricFrame& frame) {
  if (frame.rows() < 2) throw Error(ErrorCode::TooFewSamples, "z-score needs at least 2 rows");
  const Eigen::RowVectorXd mean = column_mean(frame.values());
  const Eigen::RowVectorXd sd = column_std(frame.values());
  ZScoreStats stats;
  std::vector<Index> keep;
  for (Index c = 0; c < frame.cols(); ++c) {
    const auto& name = frame.names()[static_cast<std::size_t>(c)];
    // relative tolerance so that float noise on a constant column counts as constant
    if (sd(c) <= 1e-12 * std::max(1.0, std::abs(mean(c)))) {
      stats.dropped.push_back(name);
      stats.warnings.push_back("constant column '" + name + "' dropped");
    } else {
      keep.push_back(c);
      stats.names.push_back(name);
    }
  }
  const auto k = static_cast<Index>(keep.size());
  stats.means.resize(k);
  stats.stds.resize(k);
  Eigen::MatrixXd z(frame.rows(), k);
  for (Index j = 0; j < k; ++j) {
    const Index c = keep[static_cast<std::size_t>(j)];
    stats.means(j) = mean(c);
    stats.stds(j) = sd(c);
    z.col(j) = (frame.values().col(c).array() - mean(c)) / sd(c);
  }
  return {MetricFrame(frame.timestamps(), std::move(z), stats.names, frame.interval()), std::move(stats)};
}

double student_t_two_sided_p(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) return 1.0;
  // P(|T| > |t|) = I_{dof/(dof+t^2)}(dof/2, 1/2)
  const double x = dof / (dof + t * t);
  return std::clamp(boost::math::ibeta(dof / 2.0, 0.5, x), 0.0, 1.0);
}

CorrelationResult correlate(const MetricFrame& frame, const LabelSeries& labels,
                            CorrelationOptions options) {
  if (frame.rows() != labels.size()) throw Error(ErrorCode::LengthMismatch, "frame/labels length");
  const Index d = frame.rows();
  if (d < 3) throw Error(ErrorCode::TooFewSamples, "correlation needs at least 3 rows");
  const Eigen::VectorXd k = labels.as_vector();
  const double dof = static_cast<double>(d - 2);
  CorrelationResult res;
  for (Index c = 0; c < frame.cols(); ++c) {
    const double r = pearson(k, frame.values().col(c));
    double t;
    double p;
    if (std::abs(r) >= 1.0) {
      t = std::copysign(std::numeric_limits<double>::infinity(), r);
      p = 0.0;
    } else {
      t = r * std::sqrt(dof / (1.0 - r * r));
      p = student_t_two_sided_p(t, dof);
    }
    res.names.push_back(frame.names()[static_cast<std::size_t>(c)]);
    res.r.push_back(r);
    res.t.push_back(t);
    res.p.push_back(p);
    res.retained.push_back(p < options.p_max && std::abs(r) > options.r_min);
  }
  return res;
}

SelectedFrame select_columns(const MetricFrame& frame, const std::vector<std::string>& names) {
  SelectedFrame out;
  out.method = SelectionMethod::Correlation;
  out.timestamps = frame.timestamps();
  out.names = names;
  for (const auto& n : names) {
    const auto c = frame.column(n);
    if (!c) throw Error(ErrorCode::ShapeMismatch, "metric '" + n + "' not present");
    out.retained.push_back(*c);
  }
  out.values.resize(frame.rows(), static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < out.retained.size(); ++j) {
    out.values.col(static_cast<Index>(j)) = frame.values().col(out.retained[j]);
  }
  return out;
}

std::pair<SelectedFrame, CorrelationResult> correlate_select(const MetricFrame& frame,
                                                             const LabelSeries& labels,
                                                             CorrelationOptions options) {
  auto res = correlate(frame, labels, options);
  std::vector<std::string> keep;
  for (std::size_t c = 0; c < res.names.size(); ++c) {
    if (res.retained[c]) keep.push_back(res.names[c]);
  }
  if (keep.empty()) {
    throw Error(ErrorCode::AllFiltered, "no metric passes |r| > " + format_double(options.r_min) +
                                            " and p < " + format_double(options.p_max));
  }
  return {select_columns(frame, keep), std::move(res)};
}

std::string to_csv(const CorrelationResult& result) {
  std::string out = "metric,r,t,p,retained\n";
  for (std::size_t c = 0; c < result.names.size(); ++c) {
    out += result.names[c] + "," + format_double(result.r[c]) + "," + format_double(result.t[c]) +
           "," + format_double(result.p[c]) + "," + (result.retained[c] ? "1" : "0") + "\n";
  }
  return out;
}

PcaModel pca_fit(const MetricFrame& frame, PcaOptions options) {
  if (frame.rows() < 2) throw Error(ErrorCode::TooFewSamples, "PCA needs at least 2 rows");
  PcaModel model;
  model.input_names = frame.names();
  model.means = column_mean(frame.values());
  model.stds = column_std(frame.values());
  for (Index c = 0; c < model.stds.size(); ++c) {
    if (model.stds(c) <= 0.0) model.stds(c) = 1.0;
  }
  const Eigen::MatrixXd z =
      (frame.values().rowwise() - model.means).array().rowwise() / model.stds.array();
  const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(z.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalFailure, "covariance eigendecomposition failed");
  }
  const Index n = cov.rows();
  model.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  const double total = model.eigenvalues.sum();
  if (!(total > 1e-12)) throw Error(ErrorCode::DegenerateCovariance, "covariance has rank 0");

  Index keep = 0;
  if (options.n_fixed) {
    keep = *options.n_fixed;
    if (keep < 1 || keep > n) throw Error(ErrorCode::InvalidConfig, "n_fixed out of range");
  } else {
    if (!(options.variance > 0.0 && options.variance <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "variance threshold must lie in (0,1]");
    }
    double acc = 0.0;
    while (keep < n) {
      acc += model.eigenvalues(keep);
      ++keep;
      // slack for the rounding in the running sum
      if (acc / total >= options.variance - 1e-12) break;
    }
  }
  model.projection = vectors.leftCols(keep);
  // sign convention: the largest-magnitude loading of each component is positive
  for (Index j = 0; j < keep; ++j) {
    Index arg = 0;
    model.projection.col(j).cwiseAbs().maxCoeff(&arg);
    if (model.projection(arg, j) < 0.0) model.projection.col(j) *= -1.0;
  }
  model.retained_variance = std::min(1.0, model.eigenvalues.head(keep).sum() / total);
  return model;
}

SelectedFrame pca_transform(const PcaModel& model, const MetricFrame& frame) {
  if (frame.cols() != model.projection.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "frame has " + std::to_string(frame.cols()) +
                                              " columns, model expects " +
                                              std::to_string(model.projection.rows()));
  }
  SelectedFrame out;
  out.method = SelectionMethod::Pca;
  out.timestamps = frame.timestamps();
  const Eigen::MatrixXd z =
      (frame.values().rowwise() - model.means).array().rowwise() / model.stds.array();
  out.values = z * model.projection;
  for (Index j = 0; j < model.components(); ++j) out.names.push_back("pc" + std::to_string(j));
  out.projection = model.projection;
  out.means = model.means;
  out.stds = model.stds;
  return out;
}

Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& projected) {
  return projected * model.projection.transpose();
}

SelectedFrame select_all(const MetricFrame& frame) {
  SelectedFrame out;
  out.method = SelectionMethod::None;
  out.timestamps = frame.timestamps();
  out.values = frame.values();
  out.names = frame.names();
  out.retained.resize(static_cast<std::size_t>(frame.cols()));
  std::iota(out.retained.begin(), out.retained.end(), Index{0});
  return out;
}

}  // namespace fired
