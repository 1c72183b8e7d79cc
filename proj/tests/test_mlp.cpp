#include "fired/mlp.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace fired;
using namespace fired::testing;

namespace {

struct Toy {
  ScoreMatrix m;
  LabelSeries labels;
};

// anomalies sit 4 units up on every score column
Toy separable(std::uint64_t seed, Index d = 400) {
  Rng rng(seed);
  Toy t;
  t.m.values = gaussian(d, 4, seed + 1000) * 0.5;
  t.m.learners = {"iforest", "knn", "lof", "ocsvm"};
  t.m.means = Eigen::RowVectorXd::Zero(4);
  t.m.stds = Eigen::RowVectorXd::Ones(4);
  std::vector<std::uint8_t> l(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) {
    l[static_cast<std::size_t>(i)] = rng.uniform() < 0.2;
    if (l[static_cast<std::size_t>(i)]) t.m.values.row(i).array() += 4.0;
  }
  t.labels = labels_of(l);
  return t;
}

double accuracy(const std::vector<std::uint8_t>& v, const LabelSeries& l, Index shift = 0) {
  Index hit = 0, n = 0;
  for (Index t = 0; t + shift < l.size(); ++t, ++n)
    hit += v[static_cast<std::size_t>(t)] == l.labels()[static_cast<std::size_t>(t + shift)];
  return static_cast<double>(hit) / static_cast<double>(n);
}

}  // namespace

TEST(Mlp, ZeroParametersGiveOneHalf) {
  const auto p = mlp_zeros(4, 20);
  const auto prob = mlp_probabilities(p, gaussian(7, 4, 1) * 100.0);
  for (Index i = 0; i < 7; ++i) EXPECT_DOUBLE_EQ(prob(i), 0.5);
  MlpModel model;
  model.params = p;
  const auto pred = predict_deep(model, separable(1, 10).m);
  for (auto v : pred.verdicts) EXPECT_EQ(v, 1);
}

TEST(Mlp, Shapes) {
  Rng rng(1);
  const auto p = mlp_init(4, 20, rng);
  EXPECT_EQ(p.w1.rows(), 20);
  EXPECT_EQ(p.w1.cols(), 4);
  EXPECT_EQ(p.w3.rows(), 1);
  EXPECT_EQ(p.size(), 4 * 20 + 20 + 20 * 20 + 20 + 20 + 1);
  MlpParams q = mlp_zeros(4, 20);
  q.assign(p.flatten());
  EXPECT_EQ(q, p);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed);
    const auto p = mlp_init(4, 20, rng);
    const Eigen::MatrixXd x = gaussian(20, 4, seed + 10);
    Eigen::VectorXd y(20);
    for (Index i = 0; i < 20; ++i) y(i) = rng.uniform() < 0.4;
    EXPECT_LT(oracle::max_gradient_error(p, x, y), 1e-4);
  }
}

TEST(Mlp, GradientCheckAfterScalingInputs) {
  Rng rng(9);
  const auto p = mlp_init(4, 20, rng);
  Eigen::VectorXd y(20);
  for (Index i = 0; i < 20; ++i) y(i) = i % 3 == 0;
  EXPECT_LT(oracle::max_gradient_error(p, gaussian(20, 4, 11) * 7.5, y), 1e-4);
}

TEST(Mlp, LossIsBinaryCrossEntropy) {
  Rng rng(2);
  const auto p = mlp_init(4, 20, rng);
  const Eigen::MatrixXd x = gaussian(5, 4, 3);
  Eigen::VectorXd y(5);
  y << 1, 0, 0, 1, 1;
  const auto prob = mlp_probabilities(p, x);
  double ref = 0;
  for (Index i = 0; i < 5; ++i) ref -= y(i) * std::log(prob(i)) + (1 - y(i)) * std::log(1 - prob(i));
  EXPECT_NEAR(mlp_loss(p, x, y), ref / 5, 1e-12);
}

TEST(Mlp, SeparableToyTrainsAccurately) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto toy = separable(seed);
    const auto model = train_deep(toy.m, toy.labels, TrainConfig{}, seed);
    EXPECT_GE(accuracy(predict_deep(model, toy.m).verdicts, toy.labels), 0.99) << "seed " << seed;
  }
}

TEST(Mlp, Deterministic) {
  const auto toy = separable(4, 200);
  EXPECT_EQ(train_deep(toy.m, toy.labels, TrainConfig{}, 77), train_deep(toy.m, toy.labels, TrainConfig{}, 77));
  EXPECT_FALSE(train_deep(toy.m, toy.labels, TrainConfig{}, 77).params ==
               train_deep(toy.m, toy.labels, TrainConfig{}, 78).params);
}

TEST(Mlp, ShiftPairs) {
  Eigen::MatrixXd m(5, 1);
  m << 0, 1, 2, 3, 4;
  const auto sp = shift_pairs(m, {0, 0, 1, 1, 0}, 2);
  ASSERT_EQ(sp.x.rows(), 3);
  EXPECT_EQ(sp.x.col(0), Eigen::Vector3d(0, 1, 2));
  EXPECT_EQ(sp.y, Eigen::Vector3d(1, 1, 0));
}

TEST(Mlp, ShiftedTrainingLearnsAhead) {
  // labels lead the scores by 3 rows; a shifted model must recover them
  auto toy = separable(5, 400);
  std::vector<std::uint8_t> lead(400, 0);
  for (Index t = 0; t + 3 < 400; ++t) lead[static_cast<std::size_t>(t + 3)] = toy.labels.labels()[static_cast<std::size_t>(t)];
  const auto labels = labels_of(lead);
  const auto model = train_deep(toy.m, labels, TrainConfig{}, 1, 3);
  EXPECT_EQ(model.shift, 3);
  EXPECT_GE(accuracy(predict_deep(model, toy.m).verdicts, labels, 3), 0.99);
}

TEST(Mlp, Errors) {
  auto toy = separable(1, 100);
  EXPECT_EQ(code_of([&] { train_deep(toy.m, labels_of(std::vector<std::uint8_t>(100, 0)), TrainConfig{}, 1); }),
            ErrorCode::SingleClassTraining);
  ScoreMatrix tiny = toy.m;
  tiny.values = toy.m.values.topRows(3);
  EXPECT_EQ(code_of([&] { train_deep(tiny, labels_of({0, 1, 0}), TrainConfig{}, 1); }), ErrorCode::TooFewSamples);
  MlpModel model;
  model.params = mlp_zeros(4, 20);
  ScoreMatrix three = toy.m;
  three.values = toy.m.values.leftCols(3);
  EXPECT_EQ(code_of([&] { predict_deep(model, three); }), ErrorCode::ShapeMismatch);
  TrainConfig bad;
  bad.batch = 0;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::InvalidConfig);
}

TEST(Mlp, JsonRoundTripIsExact) {
  const auto toy = separable(2, 200);
  auto model = train_deep(toy.m, toy.labels, TrainConfig{}, 5, 2);
  model.score_means = Eigen::RowVector4d(0.1, 1.0 / 3.0, -2.5, 1e-300);
  model.score_stds = Eigen::RowVector4d(1, 2, 3, 4);
  const auto j = model_to_json(model);
  EXPECT_EQ(j.at("schema_version"), kModelSchemaVersion);
  EXPECT_EQ(model_from_json(j), model);
  const auto path = (std::filesystem::temp_directory_path() / "fired_model_rt.json").string();
  save_model(model, path);
  const auto back = load_model(path);
  std::remove(path.c_str());
  EXPECT_EQ(back, model);
  EXPECT_EQ(predict_deep(back, toy.m).probabilities, predict_deep(model, toy.m).probabilities);
}

TEST(Mlp, RejectsUnknownSchema) {
  const auto toy = separable(2, 100);
  auto j = model_to_json(train_deep(toy.m, toy.labels, TrainConfig{}, 5));
  j["schema_version"] = 99;
  EXPECT_EQ(code_of([&] { model_from_json(j); }), ErrorCode::ParseError);
}
