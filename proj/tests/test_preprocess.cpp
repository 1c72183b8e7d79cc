#include "fired/preprocess.hpp"
#include "fired/stats.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numeric>

using namespace fired;
using namespace fired::testing;

// Reference values below were computed once with scipy.stats and frozen.

TEST(ZScore, ThreeValueColumn) {
  Eigen::MatrixXd v(3, 1);
  v << 1, 2, 3;
  auto [z, stats] = zscore(frame_of(v));
  EXPECT_NEAR(z.values()(0, 0), -1.224744871391589, 1e-12);
  EXPECT_NEAR(z.values()(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(z.values()(2, 0), 1.224744871391589, 1e-12);
  EXPECT_NEAR(stats.stds(0), std::sqrt(2.0 / 3.0), 1e-12);
}

TEST(ZScore, ConstantColumnDropped) {
  Eigen::MatrixXd v(3, 2);
  v << 5, 1, 5, 2, 5, 4;
  auto [z, stats] = zscore(frame_of(v));
  ASSERT_EQ(z.cols(), 1);
  EXPECT_EQ(z.names(), std::vector<std::string>{"m1"});
  EXPECT_EQ(stats.dropped, std::vector<std::string>{"m0"});
  EXPECT_EQ(stats.warnings.size(), 1u);
}

TEST(ZScore, Idempotent) {
  auto [z1, s1] = zscore(frame_of(gaussian(50, 4, 3) * 7.0));
  auto [z2, s2] = zscore(z1);
  EXPECT_LT((z1.values() - z2.values()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ZScore, TooFewRows) {
  EXPECT_EQ(code_of([] { zscore(frame_of(Eigen::MatrixXd::Ones(1, 2))); }), ErrorCode::TooFewSamples);
}

TEST(StudentT, MatchesReference) {
  EXPECT_NEAR(student_t_two_sided_p(2.0, 10), 0.07338803477074039, 1e-10);
  EXPECT_NEAR(student_t_two_sided_p(-2.0, 10), 0.07338803477074039, 1e-10);
  EXPECT_NEAR(student_t_two_sided_p(0.5, 3), 0.651447964848151, 1e-10);
  EXPECT_NEAR(student_t_two_sided_p(5.0, 100), 2.450173413503798e-06, 1e-12);
  EXPECT_DOUBLE_EQ(student_t_two_sided_p(0.0, 7), 1.0);
  EXPECT_EQ(student_t_two_sided_p(INFINITY, 7), 0.0);
}

TEST(Pearson, HandValue) {
  Eigen::VectorXd k(5), r(5);
  k << 1, 2, 3, 4, 5;
  r << 1, 2, 2, 4, 4;
  EXPECT_NEAR(pearson(k, r), 8.0 / std::sqrt(72.0), 1e-12);
}

TEST(Correlate, MatchesReference) {
  Eigen::MatrixXd v(8, 2);
  v.col(0) << 1, 2, 3, 4, 5, 6, 7, 8;
  v.col(1) << 3.1, 2.7, 5.0, 4.4, 1.0, 0.3, 2.2, 6.1;
  const auto labels = labels_of({0, 0, 0, 1, 0, 1, 1, 1});
  const auto c = correlate(frame_of(v), labels);
  EXPECT_NEAR(c.r[0], 0.7637626158259733, 1e-12);
  EXPECT_NEAR(c.p[0], 0.027396043909112138, 1e-10);
  EXPECT_NEAR(c.r[1], 0.08087457990257885, 1e-12);
  EXPECT_NEAR(c.p[1], 0.8490200854510567, 1e-10);
  EXPECT_TRUE(c.retained[0]);
  EXPECT_FALSE(c.retained[1]);
}

TEST(Correlate, TStatisticFormula) {
  // r = 0.5 with d = 102: t = 0.5 * sqrt(100 / 0.75)
  const double t = 0.5 * std::sqrt(100.0 / 0.75);
  EXPECT_NEAR(t, 5.7735, 1e-4);
  // build a column with r exactly 0.5 against balanced labels
  const Index d = 102;
  std::vector<std::uint8_t> l(d);
  Eigen::VectorXd y(d), e(d);
  for (Index i = 0; i < d; ++i) {
    l[static_cast<std::size_t>(i)] = i % 2;
    y(i) = i % 2;
    e(i) = (i / 2) % 2 == 0 ? 1.0 : -1.0;  // orthogonal to y, same spread
  }
  const Eigen::VectorXd yc = (y.array() - y.mean()).matrix();
  const Eigen::VectorXd ec = (e.array() - e.mean()).matrix();
  const double sy = std::sqrt(yc.squaredNorm() / d), se = std::sqrt(ec.squaredNorm() / d);
  ASSERT_NEAR(yc.dot(ec), 0.0, 1e-12);
  Eigen::MatrixXd col(d, 1);
  col.col(0) = 0.5 * yc / sy + std::sqrt(0.75) * ec / se;
  const auto c = correlate(frame_of(col), labels_of(l));
  EXPECT_NEAR(c.r[0], 0.5, 1e-12);
  EXPECT_NEAR(c.t[0], t, 1e-9);
}

TEST(Correlate, PerfectCorrelationRetained) {
  Eigen::MatrixXd v(4, 1);
  v << 0, 0, 2, 2;
  const auto c = correlate(frame_of(v), labels_of({0, 0, 1, 1}));
  EXPECT_DOUBLE_EQ(c.r[0], 1.0);
  EXPECT_TRUE(std::isinf(c.t[0]));
  EXPECT_EQ(c.p[0], 0.0);
  EXPECT_TRUE(c.retained[0]);
}

TEST(Correlate, AllFiltered) {
  const auto labels = labels_of({0, 1, 0, 1, 0, 1, 0, 1});
  Eigen::MatrixXd v(8, 1);
  v << 1, 1, 2, 2, 1, 1, 2, 2;
  EXPECT_EQ(code_of([&] { correlate_select(frame_of(v), labels); }), ErrorCode::AllFiltered);
}

TEST(Correlate, SelectKeepsOriginalOrder) {
  const Index d = 200;
  std::vector<std::uint8_t> l(d);
  for (Index i = 0; i < d; ++i) l[static_cast<std::size_t>(i)] = (i / 10) % 2;
  Eigen::MatrixXd v = gaussian(d, 5, 11) * 0.1;
  for (Index i = 0; i < d; ++i) {
    v(i, 1) += l[static_cast<std::size_t>(i)];
    v(i, 3) -= l[static_cast<std::size_t>(i)];
  }
  auto [sel, corr] = correlate_select(frame_of(v), labels_of(l));
  EXPECT_EQ(sel.names, (std::vector<std::string>{"m1", "m3"}));
  EXPECT_EQ(sel.retained, (std::vector<Index>{1, 3}));
  EXPECT_EQ(sel.values.col(1), v.col(3));
  EXPECT_LT(corr.r[3], -0.5);
}

TEST(Correlate, PermutationEquivariant) {
  const Index d = 120;
  Rng rng(5);
  std::vector<std::uint8_t> l(d);
  for (auto& x : l) x = rng.uniform() < 0.3;
  Eigen::MatrixXd v = gaussian(d, 6, 9);
  for (Index i = 0; i < d; ++i) v(i, 2) += 2.0 * l[static_cast<std::size_t>(i)];
  const std::vector<Index> perm{4, 2, 0, 5, 1, 3};
  Eigen::MatrixXd pv(d, 6);
  std::vector<std::string> pn;
  for (Index j = 0; j < 6; ++j) {
    pv.col(j) = v.col(perm[static_cast<std::size_t>(j)]);
    pn.push_back("m" + std::to_string(perm[static_cast<std::size_t>(j)]));
  }
  const auto a = correlate(frame_of(v), labels_of(l));
  const auto b = correlate(MetricFrame(stamps(d), pv, pn, 60), labels_of(l));
  for (std::size_t j = 0; j < 6; ++j) {
    const auto src = static_cast<std::size_t>(perm[j]);
    EXPECT_EQ(b.names[j], a.names[src]);
    EXPECT_DOUBLE_EQ(b.r[j], a.r[src]);
    EXPECT_DOUBLE_EQ(b.p[j], a.p[src]);
    EXPECT_EQ(b.retained[j], a.retained[src]);
  }
}

TEST(Correlate, ScaleInvariant) {
  const Index d = 90;
  Rng rng(2);
  std::vector<std::uint8_t> l(d);
  for (auto& x : l) x = rng.uniform() < 0.4;
  Eigen::MatrixXd v = gaussian(d, 3, 4);
  v.col(1) = v.col(1) * 1000.0 + Eigen::VectorXd::Constant(d, 17.0);
  const auto raw = correlate(frame_of(v), labels_of(l));
  const auto z = correlate(zscore(frame_of(v)).first, labels_of(l));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(raw.r[j], z.r[j], 1e-12);
}

TEST(Correlate, CsvHeader) {
  Eigen::MatrixXd v(4, 1);
  v << 0, 0, 2, 2;
  const auto csv = to_csv(correlate(frame_of(v), labels_of({0, 0, 1, 1})));
  EXPECT_EQ(csv.rfind("metric,r,t,p,retained\n", 0), 0u);
}

TEST(SelectColumns, ByName) {
  const auto f = frame_of(gaussian(5, 4, 1));
  const auto s = select_columns(f, {"m2", "m0"});
  EXPECT_EQ(s.retained, (std::vector<Index>{2, 0}));
  EXPECT_EQ(s.values.col(0), f.values().col(2));
  EXPECT_EQ(code_of([&] { select_columns(f, {"nope"}); }), ErrorCode::ShapeMismatch);
}

TEST(Pca, RankOneData) {
  Eigen::MatrixXd v(20, 2);
  for (Index i = 0; i < 20; ++i) v.row(i) << i, 3.0 * i + 1.0;
  const auto m = pca_fit(frame_of(v));
  EXPECT_EQ(m.components(), 1);
  EXPECT_NEAR(m.retained_variance, 1.0, 1e-12);
}

TEST(Pca, IsotropicFixedComponents) {
  // +-1 in every sign pattern: identity covariance after standardization
  Eigen::MatrixXd v(8, 3);
  for (Index i = 0; i < 8; ++i) v.row(i) << (i & 1 ? 1 : -1), (i & 2 ? 1 : -1), (i & 4 ? 1 : -1);
  PcaOptions opt;
  opt.n_fixed = 3;
  const auto m = pca_fit(frame_of(v), opt);
  EXPECT_NEAR(m.retained_variance, 1.0, 1e-12);
  // a permutation of axes up to sign; the sign convention makes it a true permutation
  for (Index j = 0; j < 3; ++j) {
    EXPECT_NEAR(m.projection.col(j).cwiseAbs().maxCoeff(), 1.0, 1e-9);
    EXPECT_NEAR(m.projection.col(j).maxCoeff(), 1.0, 1e-9);
  }
}

TEST(Pca, ThresholdRuleAndOrthonormality) {
  Eigen::MatrixXd base = gaussian(400, 3, 21);
  Eigen::MatrixXd mix = gaussian(3, 10, 22);
  Eigen::MatrixXd v = base * mix + 0.05 * gaussian(400, 10, 23);
  const auto f = frame_of(v);
  for (double var : {0.5, 0.8, 0.95, 0.99, 1.0}) {
    PcaOptions opt;
    opt.variance = var;
    const auto m = pca_fit(f, opt);
    const Index n = m.components();
    const double total = m.eigenvalues.sum();
    EXPECT_GE(m.retained_variance, var - 1e-9);
    if (n > 1) EXPECT_LT(m.eigenvalues.head(n - 1).sum() / total, var);
    for (Index i = 1; i < m.eigenvalues.size(); ++i) EXPECT_LE(m.eigenvalues(i), m.eigenvalues(i - 1));
    const Eigen::MatrixXd gram = m.projection.transpose() * m.projection;
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-8);
    // standardized data: trace of the covariance is the column count
    EXPECT_NEAR(total, 10.0, 1e-6 * 10.0);
  }
}

TEST(Pca, ReconstructionBound) {
  Eigen::MatrixXd v = gaussian(300, 2, 31) * gaussian(2, 6, 32) + 0.3 * gaussian(300, 6, 33);
  const auto f = frame_of(v);
  const auto m = pca_fit(f, {0.9, std::nullopt});
  const auto proj = pca_transform(m, f);
  const Eigen::MatrixXd back = pca_reconstruct(m, proj.values);
  const Eigen::MatrixXd z = (v.rowwise() - m.means).array().rowwise() / m.stds.array();
  const double err = (z - back).squaredNorm() / static_cast<double>(v.rows());
  const double total = m.eigenvalues.sum();
  EXPECT_LE(err, (1.0 - m.retained_variance) * total + 1e-6);
}

TEST(Pca, DuplicatedRowGivesIdenticalOutput) {
  const Eigen::MatrixXd v = gaussian(50, 4, 41);
  const auto m = pca_fit(frame_of(v));
  Eigen::MatrixXd dup = v.row(0).replicate(50, 1);
  const auto out = pca_transform(m, frame_of(dup));
  for (Index r = 1; r < 50; ++r) EXPECT_EQ(out.values.row(r), out.values.row(0));
}

TEST(Pca, Errors) {
  const auto m = pca_fit(frame_of(gaussian(30, 3, 1)));
  EXPECT_EQ(code_of([&] { pca_transform(m, frame_of(gaussian(30, 4, 1))); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([] { pca_fit(frame_of(Eigen::MatrixXd::Constant(10, 3, 2.0))); }),
            ErrorCode::DegenerateCovariance);
}
