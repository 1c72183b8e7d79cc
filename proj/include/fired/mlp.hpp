#pragma once

#include "fired/core.hpp"
#include "fired/random.hpp"

#include "fired/serialize.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fired {

struct TrainConfig {
  Index hidden = 20;
  Index epochs = 100;
  Index batch = 20;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool shuffle = true;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Weights of the two-hidden-layer perceptron; W_l maps layer l-1 to layer l.
struct MlpParams {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;

  Index size() const;
  Eigen::VectorXd flatten() const;
  /// Inverse of flatten() for the shapes of `*this`.
  void assign(const Eigen::VectorXd& flat);

  friend bool operator==(const MlpParams& a, const MlpParams& b) {
    return a.w1 == b.w1 && a.w2 == b.w2 && a.w3 == b.w3 && a.b1 == b.b1 && a.b2 == b.b2 &&
           a.b3 == b.b3;
  }
};

struct MlpModel {
  MlpParams params;
  TrainConfig config;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  Index shift = 0;
  std::vector<std::string> learners;
  Eigen::RowVectorXd score_means;
  Eigen::RowVectorXd score_stds;
  std::vector<std::string> warnings;

  std::vector<Index> layer_sizes() const;
  friend bool operator==(const MlpModel& a, const MlpModel& b) {
    return a.params == b.params && a.config == b.config && a.seed == b.seed &&
           a.threshold == b.threshold && a.shift == b.shift && a.learners == b.learners &&
           a.score_means == b.score_means && a.score_stds == b.score_stds;
  }
};

/// He-normal weights, zero biases.
MlpParams mlp_init(Index inputs, Index hidden, Rng& rng);
MlpParams mlp_zeros(Index inputs, Index hidden);

/// Pre-sigmoid output for each row of `x`.
Eigen::VectorXd mlp_logits(const MlpParams& p, const Eigen::MatrixXd& x);
Eigen::VectorXd mlp_probabilities(const MlpParams& p, const Eigen::MatrixXd& x);

/// Mean binary cross-entropy over the rows of `x`.
double mlp_loss(const MlpParams& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Loss and its gradient with respect to every parameter.
double mlp_gradient(const MlpParams& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    MlpParams& grad);

struct ShiftedPairs {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};
/// Pairs (M[t], y[t+s]) for t = 0 .. d-s-1.
ShiftedPairs shift_pairs(const Eigen::MatrixXd& m, const std::vector<std::uint8_t>& labels, Index shift);

MlpModel train_deep(const ScoreMatrix& train, const LabelSeries& labels, const TrainConfig& config,
                    std::uint64_t seed, Index shift = 0);

struct DeepPrediction {
  std::vector<double> probabilities;
  std::vector<std::uint8_t> verdicts;
};
DeepPrediction predict_deep(const MlpModel& model, const ScoreMatrix& m);

inline constexpr int kModelSchemaVersion = 1;

Json model_to_json(const MlpModel& model);
MlpModel model_from_json(const Json& j);
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace fired
