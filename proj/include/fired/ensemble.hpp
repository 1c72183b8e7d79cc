#pragma once

#include "fired/core.hpp"
#include "fired/stats.hpp"

#include <string>
#include <vector>

namespace fired {

/// Row-wise maximum of a score matrix.
template <typename Derived>
Vector<typename Derived::Scalar> ensemble_max(const Eigen::MatrixBase<Derived>& m) {
  return m.rowwise().maxCoeff();
}

/// Row-wise arithmetic mean.
template <typename Derived>
Vector<typename Derived::Scalar> ensemble_avg(const Eigen::MatrixBase<Derived>& m) {
  return m.rowwise().mean();
}

/// Row-wise dot product with `w`; callers check the width.
template <typename Derived, typename DerivedW>
Vector<typename Derived::Scalar> ensemble_weighted(const Eigen::MatrixBase<Derived>& m,
                                                   const Eigen::MatrixBase<DerivedW>& w) {
  return m * w;
}

struct EnsembleWeights {
  Eigen::VectorXd w;
  std::vector<std::string> warnings;
};

struct Assembled {
  ScoreMatrix matrix;
  std::vector<std::string> warnings;
};

/// z-scores each base score column (population moments). Known learners are
/// placed in the order iforest, knn, lof, ocsvm; constant columns become zeros.
Assembled assemble(const std::vector<ScoreVector>& scores);

/// Applies stored column statistics to raw scores (columns in `matrix.learners` order).
ScoreMatrix normalize_with(const ScoreMatrix& reference, const std::vector<ScoreVector>& scores);

ScoreVector ensemble_max(const ScoreMatrix& m);
ScoreVector ensemble_avg(const ScoreMatrix& m);
ScoreVector ensemble_weighted(const ScoreMatrix& m, const EnsembleWeights& w);

/// Diversity weights from pairwise normalized mutual information between
/// equal-width discretizations of the columns.
EnsembleWeights mi_weights(const Eigen::MatrixXd& m, Index bins = 10);

/// Equal-width bin index of each entry over the column's range.
std::vector<Index> discretize(const Eigen::Ref<const Eigen::VectorXd>& column, Index bins);
/// Mutual information (nats) of two discrete label vectors.
double mutual_information(const std::vector<Index>& a, const std::vector<Index>& b, Index bins);
double entropy(const std::vector<Index>& a, Index bins);

struct Split {
  Index boundary = 0;  // first test row
  ScoreMatrix train;
  ScoreMatrix test;
  LabelSeries train_labels;
  LabelSeries test_labels;
  std::vector<std::string> warnings;
};

/// Chronological split: the first ceil(fraction * d) rows train.
Split split(const ScoreMatrix& m, const LabelSeries& labels, double train_fraction = 0.5);
Index split_boundary(Index rows, double train_fraction);

ScoreMatrix slice_rows(const ScoreMatrix& m, Index begin, Index end);

/// Verdicts from a linear-ensemble score via the anomaly-fraction rule, with
/// a rank-based probability (1 - position / d in descending score order).
struct RankedVerdicts {
  std::vector<std::uint8_t> verdicts;
  std::vector<double> probabilities;
  double threshold = 1.0;
};
RankedVerdicts rank_verdicts(const Eigen::VectorXd& scores, double anomaly_fraction);

}  // namespace fired
