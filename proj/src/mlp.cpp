#include "fired/mlp.hpp"

#include "fired/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fired {

namespace {

struct Forward {
  Eigen::MatrixXd a1, h1, a2, h2;
  Eigen::VectorXd z;
};

Forward forward(const MlpParams& p, const Eigen::MatrixXd& x) {
  Forward f;
  f.a1 = (x * p.w1.transpose()).rowwise() + p.b1.transpose();
  f.h1 = f.a1.cwiseMax(0.0);
  f.a2 = (f.h1 * p.w2.transpose()).rowwise() + p.b2.transpose();
  f.h2 = f.a2.cwiseMax(0.0);
  f.z = (f.h2 * p.w3.transpose()).array() + p.b3(0);
  return f;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) - y z, evaluated without overflow.
double bce_with_logit(double z, double y) {
  return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

double mean_loss(const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
  double total = 0.0;
  for (Index i = 0; i < z.size(); ++i) total += bce_with_logit(z(i), y(i));
  return total / static_cast<double>(z.size());
}

Json config_to_json(const TrainConfig& c) {
  return Json{{"hidden", c.hidden},         {"epochs", c.epochs},   {"batch", c.batch},
              {"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2},
              {"epsilon", c.epsilon},       {"shuffle", c.shuffle}};
}

TrainConfig config_from_json(const Json& j) {
  TrainConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.shuffle = j.value("shuffle", c.shuffle);
  return c;
}

}  // namespace

void TrainConfig::validate() const {
  if (hidden < 1 || epochs < 1 || batch < 1) {
    throw Error(ErrorCode::InvalidConfig, "hidden, epochs and batch must be positive");
  }
  if (!(learning_rate > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "invalid optimizer constants");
  }
}

Index MlpParams::size() const {
  return w1.size() + w2.size() + w3.size() + b1.size() + b2.size() + b3.size();
}

Eigen::VectorXd MlpParams::flatten() const {
  Eigen::VectorXd out(size());
  Index at = 0;
  for (const Eigen::MatrixXd* m : {&w1, &w2, &w3}) {
    // Row-major order, matching the persisted layout.
    for (Index r = 0; r < m->rows(); ++r) {
      out.segment(at, m->cols()) = m->row(r).transpose();
      at += m->cols();
    }
  }
  for (const Eigen::VectorXd* b : {&b1, &b2, &b3}) {
    out.segment(at, b->size()) = *b;
    at += b->size();
  }
  return out;
}

void MlpParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != size()) throw Error(ErrorCode::ShapeMismatch, "parameter vector length");
  Index at = 0;
  for (Eigen::MatrixXd* m : {&w1, &w2, &w3}) {
    for (Index r = 0; r < m->rows(); ++r) {
      m->row(r) = flat.segment(at, m->cols()).transpose();
      at += m->cols();
    }
  }
  for (Eigen::VectorXd* b : {&b1, &b2, &b3}) {
    *b = flat.segment(at, b->size());
    at += b->size();
  }
}

std::vector<Index> MlpModel::layer_sizes() const {
  return {params.w1.cols(), params.w1.rows(), params.w2.rows(), params.w3.rows()};
}

MlpParams mlp_zeros(Index inputs, Index hidden) {
  MlpParams p;
  p.w1 = Eigen::MatrixXd::Zero(hidden, inputs);
  p.w2 = Eigen::MatrixXd::Zero(hidden, hidden);
  p.w3 = Eigen::MatrixXd::Zero(1, hidden);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.b2 = Eigen::VectorXd::Zero(hidden);
  p.b3 = Eigen::VectorXd::Zero(1);
  return p;
}

MlpParams mlp_init(Index inputs, Index hidden, Rng& rng) {
  MlpParams p = mlp_zeros(inputs, hidden);
  auto fill = [&rng](Eigen::MatrixXd& w) {
    const double sigma = std::sqrt(2.0 / static_cast<double>(w.cols()));
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = rng.normal(0.0, sigma);
    }
  };
  fill(p.w1);
  fill(p.w2);
  fill(p.w3);
  return p;
}

Eigen::VectorXd mlp_logits(const MlpParams& p, const Eigen::MatrixXd& x) { return forward(p, x).z; }

Eigen::VectorXd mlp_probabilities(const MlpParams& p, const Eigen::MatrixXd& x) {
  return mlp_logits(p, x).unaryExpr([](double z) { return sigmoid(z); });
}

double mlp_loss(const MlpParams& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return mean_loss(mlp_logits(p, x), y);
}

double mlp_gradient(const MlpParams& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    MlpParams& grad) {
  const Forward f = forward(p, x);
  const auto n = static_cast<double>(x.rows());
  const Eigen::VectorXd dz = (f.z.unaryExpr([](double z) { return sigmoid(z); }) - y) / n;

  grad.w3 = dz.transpose() * f.h2;
  grad.b3 = Eigen::VectorXd::Constant(1, dz.sum());
  const Eigen::MatrixXd da2 =
      ((dz * p.w3).array() * (f.a2.array() > 0.0).cast<double>()).matrix();
  grad.w2 = da2.transpose() * f.h1;
  grad.b2 = da2.colwise().sum().transpose();
  const Eigen::MatrixXd da1 =
      ((da2 * p.w2).array() * (f.a1.array() > 0.0).cast<double>()).matrix();
  grad.w1 = da1.transpose() * x;
  grad.b1 = da1.colwise().sum().transpose();
  return mean_loss(f.z, y);
}

ShiftedPairs shift_pairs(const Eigen::MatrixXd& m, const std::vector<std::uint8_t>& labels, Index shift) {
  if (shift < 0) throw Error(ErrorCode::InvalidConfig, "shift must be >= 0");
  if (static_cast<Index>(labels.size()) != m.rows()) {
    throw Error(ErrorCode::LengthMismatch, "score matrix vs labels");
  }
  const Index n = std::max<Index>(0, m.rows() - shift);
  ShiftedPairs out;
  out.x = m.topRows(n);
  out.y.resize(n);
  for (Index t = 0; t < n; ++t) out.y(t) = labels[static_cast<std::size_t>(t + shift)];
  return out;
}

MlpModel train_deep(const ScoreMatrix& train, const LabelSeries& labels, const TrainConfig& config,
                    std::uint64_t seed, Index shift) {
  config.validate();
  const ShiftedPairs pairs = shift_pairs(train.values, labels.labels(), shift);
  const Index n = pairs.x.rows();
  if (n < config.batch) {
    throw Error(ErrorCode::TooFewSamples,
                std::to_string(n) + " training pairs for batch size " + std::to_string(config.batch));
  }
  const double positives = pairs.y.sum();
  if (positives == 0.0 || positives == static_cast<double>(n)) {
    throw Error(ErrorCode::SingleClassTraining, "training labels contain a single class");
  }

  MlpModel model;
  model.config = config;
  model.seed = seed;
  model.shift = shift;
  model.learners = train.learners;
  model.score_means = train.means;
  model.score_stds = train.stds;

  Rng init_rng(derive_seed(seed, "init"));
  Rng shuffle_rng(derive_seed(seed, "shuffle"));
  model.params = mlp_init(train.cols(), config.hidden, init_rng);

  Eigen::VectorXd theta = model.params.flatten();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  MlpParams grad;
  Eigen::MatrixXd xb;
  Eigen::VectorXd yb;
  double b1t = 1.0;
  double b2t = 1.0;
  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) shuffle_rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (Index start = 0; start < n; start += config.batch) {
      const Index size = std::min(config.batch, n - start);
      xb.resize(size, pairs.x.cols());
      yb.resize(size);
      for (Index r = 0; r < size; ++r) {
        const Index src = order[static_cast<std::size_t>(start + r)];
        xb.row(r) = pairs.x.row(src);
        yb(r) = pairs.y(src);
      }
      const double loss = mlp_gradient(model.params, xb, yb, grad);
      epoch_loss += loss * static_cast<double>(size);
      const Eigen::VectorXd g = grad.flatten();
      b1t *= config.beta1;
      b2t *= config.beta2;
      m1 = config.beta1 * m1 + (1.0 - config.beta1) * g;
      m2 = config.beta2 * m2 + (1.0 - config.beta2) * g.cwiseProduct(g);
      theta.array() -= config.learning_rate * (m1.array() / (1.0 - b1t)) /
                       ((m2.array() / (1.0 - b2t)).sqrt() + config.epsilon);
      model.params.assign(theta);
    }
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::NonFiniteLoss, "loss diverged in epoch " + std::to_string(epoch));
    }
  }
  if (!theta.allFinite()) throw Error(ErrorCode::NonFiniteLoss, "non-finite parameters after training");
  return model;
}

DeepPrediction predict_deep(const MlpModel& model, const ScoreMatrix& m) {
  if (m.cols() != model.params.w1.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "model expects " + std::to_string(model.params.w1.cols()) +
                                              " score columns, got " + std::to_string(m.cols()));
  }
  const Eigen::VectorXd p = mlp_probabilities(model.params, m.values);
  DeepPrediction out;
  out.probabilities.assign(p.data(), p.data() + p.size());
  out.verdicts.reserve(out.probabilities.size());
  for (double v : out.probabilities) out.verdicts.push_back(v >= model.threshold ? 1 : 0);
  return out;
}

Json model_to_json(const MlpModel& model) {
  const auto& p = model.params;
  return Json{{"schema_version", kModelSchemaVersion},
              {"layer_sizes", model.layer_sizes()},
              {"weights",
               {{"w1", matrix_to_json(p.w1)},
                {"w2", matrix_to_json(p.w2)},
                {"w3", matrix_to_json(p.w3)},
                {"b1", vector_to_json(p.b1)},
                {"b2", vector_to_json(p.b2)},
                {"b3", vector_to_json(p.b3)}}},
              {"config", config_to_json(model.config)},
              {"seed", model.seed},
              {"threshold", model.threshold},
              {"shift", model.shift},
              {"normalization",
               {{"learners", model.learners},
                {"means", vector_to_json(model.score_means.transpose())},
                {"stds", vector_to_json(model.score_stds.transpose())}}}};
}

MlpModel model_from_json(const Json& j) {
  try {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
      throw Error(ErrorCode::ParseError, "unsupported model schema version");
    }
    MlpModel model;
    const auto& w = j.at("weights");
    model.params.w1 = matrix_from_json(w.at("w1"));
    model.params.w2 = matrix_from_json(w.at("w2"));
    model.params.w3 = matrix_from_json(w.at("w3"));
    model.params.b1 = vector_from_json(w.at("b1"));
    model.params.b2 = vector_from_json(w.at("b2"));
    model.params.b3 = vector_from_json(w.at("b3"));
    const auto& p = model.params;
    if (p.w2.cols() != p.w1.rows() || p.w3.cols() != p.w2.rows() || p.w3.rows() != 1 ||
        p.b1.size() != p.w1.rows() || p.b2.size() != p.w2.rows() || p.b3.size() != 1) {
      throw Error(ErrorCode::ShapeMismatch, "model layer shapes do not chain");
    }
    if (j.at("layer_sizes").get<std::vector<Index>>() != model.layer_sizes()) {
      throw Error(ErrorCode::ShapeMismatch, "layer_sizes disagree with weights");
    }
    model.config = config_from_json(j.at("config"));
    model.seed = j.at("seed").get<std::uint64_t>();
    model.threshold = j.at("threshold").get<double>();
    model.shift = j.at("shift").get<Index>();
    const auto& norm = j.at("normalization");
    model.learners = norm.at("learners").get<std::vector<std::string>>();
    model.score_means = vector_from_json(norm.at("means")).transpose();
    model.score_stds = vector_from_json(norm.at("stds")).transpose();
    return model;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model: ") + e.what());
  }
}

void save_model(const MlpModel& model, const std::string& path) { write_json(path, model_to_json(model)); }

MlpModel load_model(const std::string& path) { return model_from_json(read_json(path)); }

}  // namespace fired
