#pragma once

#include "fired/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fired {

enum class DetectorKind { IForest, Knn, Lof, Ocsvm };
enum class Distance { Euclidean, Manhattan };
enum class KnnAggregate { Kth, Mean };

std::string to_string(DetectorKind kind);
DetectorKind detector_kind_from_string(const std::string& s);

struct DetectorSpec {
  DetectorKind kind = DetectorKind::IForest;
  double anomaly_fraction = 0.1;
  // iforest
  Index n_trees = 100;
  Index subsample = 256;
  // knn / lof
  Index k = 5;
  KnnAggregate knn_aggregate = KnnAggregate::Kth;
  Distance distance = Distance::Euclidean;
  // ocsvm; nu is the anomaly fraction
  std::optional<double> gamma;
  double tolerance = 1e-4;
  Index max_iterations = 0;  // 0 = max(1e7, 100 d)
  double cache_mb = 256.0;
  std::uint64_t seed = 0;

  /// Defaults per kind: 100 trees, k=5 for KNN, k=20 for LOF.
  static DetectorSpec defaults(DetectorKind kind, double anomaly_fraction, std::uint64_t seed = 0);

  std::string name() const { return to_string(kind); }
  void validate(Index rows) const;
};

/// The four base learners in their fixed ensemble column order.
std::vector<DetectorSpec> default_detectors(double anomaly_fraction, std::uint64_t master_seed);

ScoreVector fit_score(const DetectorSpec& spec, const Eigen::MatrixXd& data);
ScoreVector fit_score(const DetectorSpec& spec, const SelectedFrame& data);

/// Flags exactly ceil(fraction * d) highest scores; ties go to earlier rows.
std::vector<std::uint8_t> threshold(const Eigen::VectorXd& scores, double anomaly_fraction);

/// `timestamp,score`
std::string to_csv(const ScoreVector& scores, const std::vector<Timestamp>& timestamps);
ScoreVector parse_score_csv(const std::string& text, const std::string& learner);

// --- isolation forest ------------------------------------------------------

/// Average unsuccessful-search path length of a binary search tree on n keys.
double average_path_length(Index n);

struct IsolationTree {
  struct Node {
    Index feature = -1;  // -1 marks a leaf
    double split = 0.0;
    Index left = -1;
    Index right = -1;
    Index size = 0;
  };
  std::vector<Node> nodes;  // nodes[0] is the root
};

struct IsolationForest {
  std::vector<IsolationTree> trees;
  Index sample_size = 0;
};

IsolationForest iforest_fit(const Eigen::MatrixXd& data, Index n_trees, Index subsample,
                            std::uint64_t seed);
double iforest_path_length(const IsolationTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x);
/// 2^(-E[h(x)] / c(psi)), in (0, 1].
Eigen::VectorXd iforest_score(const IsolationForest& forest, const Eigen::MatrixXd& data);

// --- nearest neighbours ------------------------------------------------------

struct Neighbors {
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> index;  // d x k, nearest first
  Eigen::MatrixXd distance;                                    // d x k
};

/// k nearest other rows of each row (self excluded, duplicates included).
/// Ties are broken by row index.
Neighbors nearest_neighbors(const Eigen::MatrixXd& data, Index k, Distance metric);

Eigen::VectorXd knn_score(const Eigen::MatrixXd& data, Index k, Distance metric,
                          KnnAggregate aggregate = KnnAggregate::Kth);
Eigen::VectorXd lof_score(const Eigen::MatrixXd& data, Index k, Distance metric);

// --- one-class SVM -----------------------------------------------------------

struct OcsvmModel {
  Eigen::MatrixXd support;      // rows with nonzero multiplier
  Eigen::VectorXd coefficient;  // their multipliers, sum = nu * l
  double rho = 0.0;
  double gamma = 1.0;
  double nu = 0.5;
  Index iterations = 0;
  double kkt_gap = 0.0;             // maximal violating-pair gap at exit
  Eigen::VectorXd train_decision;   // decision values on the training rows
};

/// 1 / (n_features * Var(all entries)), or 1 for constant data.
double ocsvm_default_gamma(const Eigen::MatrixXd& data);

/// nu-one-class SVM with RBF kernel. The dual (0 <= a_i <= 1, sum a = nu l)
/// is solved by pairwise coordinate descent with second-order working-set
/// selection until the maximal KKT violation is below `tolerance`.
OcsvmModel ocsvm_fit(const Eigen::MatrixXd& data, double nu, double gamma, double tolerance = 1e-4,
                     Index max_iterations = 0, double cache_mb = 256.0);
/// sum_i a_i K(s_i, x) - rho; negative means outside the learned support.
Eigen::VectorXd ocsvm_decision(const OcsvmModel& model, const Eigen::MatrixXd& data);

}  // namespace fired
