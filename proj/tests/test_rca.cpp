#include "fired/rca.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>

using namespace fired;
using namespace fired::testing;

namespace {

const std::vector<Index> kNone;

Eigen::MatrixXd chain_data(std::uint64_t seed, Index n = 2000) {
  const Eigen::MatrixXd e = gaussian(n, 3, seed);
  Eigen::MatrixXd x(n, 3);
  x.col(0) = e.col(0);
  x.col(1) = 0.8 * x.col(0) + e.col(1);
  x.col(2) = 0.8 * x.col(1) + e.col(2);
  return x;
}

CausalGraph graph_of(const std::string& edges) { return parse_edge_list(edges); }

std::vector<RankedCause> ranking(std::initializer_list<const char*> names) {
  std::vector<RankedCause> r;
  std::size_t rank = 1;
  for (const char* n : names) {
    r.push_back({n, 10 - rank, rank});
    ++rank;
  }
  return r;
}

}  // namespace

TEST(CiTest, CopyIsDependent) {
  Eigen::MatrixXd x(200, 2);
  x.col(0) = gaussian(200, 1, 1);
  x.col(1) = x.col(0);
  const auto r = ci_test(x, 0, 1, kNone);
  EXPECT_FALSE(r.independent);
  EXPECT_EQ(r.p_value, 0.0);
}

TEST(CiTest, IndependentGaussians) {
  int independent = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) independent += ci_test(gaussian(2000, 2, seed), 0, 1, kNone).independent;
  EXPECT_GE(independent, 18);
}

TEST(CiTest, ChainSeparatedByMiddle) {
  int independent = 0;
  const std::vector<Index> s{1};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = chain_data(seed);
    EXPECT_FALSE(ci_test(x, 0, 2, kNone).independent);
    independent += ci_test(x, 0, 2, s).independent;
  }
  EXPECT_GE(independent, 18);
}

TEST(CiTest, FisherStatistic) {
  // rho = 0.3 with n = 103: stat = sqrt(100) * atanh(0.3)
  Eigen::Matrix2d c;
  c << 1, 0.3, 0.3, 1;
  const CiTest t(c, 103, 0.05);
  const auto r = t(0, 1, kNone);
  EXPECT_NEAR(r.partial, 0.3, 1e-15);
  EXPECT_NEAR(r.statistic, 10.0 * std::atanh(0.3), 1e-12);
  EXPECT_NEAR(t.critical_value(), 1.959963984540054, 1e-12);
  EXPECT_FALSE(r.independent);
}

TEST(CiTest, PartialCorrelationFormula) {
  Eigen::Matrix3d c;
  c << 1, 0.5, 0.4, 0.5, 1, 0.6, 0.4, 0.6, 1;
  const CiTest t(c, 500, 0.05);
  const std::vector<Index> s{2};
  const double expected = (0.5 - 0.4 * 0.6) / std::sqrt((1 - 0.16) * (1 - 0.36));
  EXPECT_NEAR(t.partial_correlation(0, 1, s), expected, 1e-12);
}

TEST(CiTest, SingularConditioningSetIsRegularized) {
  Eigen::MatrixXd x(300, 4);
  x.leftCols(3) = gaussian(300, 3, 4);
  x.col(3) = x.col(2);
  const std::vector<Index> s{2, 3};
  const auto r = ci_test(x, 0, 1, s);
  EXPECT_TRUE(r.regularized);
  EXPECT_TRUE(std::isfinite(r.statistic));
}

TEST(Graph, OrientRefusesCycles) {
  CausalGraph g({"a", "b", "c"});
  g.add_directed(0, 1);
  g.add_directed(1, 2);
  g.add_undirected(0, 2);
  EXPECT_FALSE(g.orient(2, 0));
  EXPECT_TRUE(g.undirected(0, 2));
  EXPECT_TRUE(g.orient(0, 2));
  EXPECT_FALSE(g.orient(0, 2));  // no longer undirected
  EXPECT_TRUE(g.acyclic());
  EXPECT_EQ(code_of([&] { g.add_directed(2, 0); }), ErrorCode::InvalidConfig);
}

TEST(Graph, EdgeListRoundTrip) {
  const auto g = graph_of("a -> b\nc -- b\nb -> indicator\n");
  EXPECT_TRUE(g.directed(g.require("a"), g.require("b")));
  EXPECT_TRUE(g.undirected(g.require("b"), g.require("c")));
  EXPECT_EQ(parse_edge_list(to_edge_list(g)), g);
  EXPECT_EQ(code_of([] { parse_edge_list("a => b"); }), ErrorCode::ParseError);
}

TEST(Graph, JsonRoundTrip) {
  const auto g = graph_of("x -> y\ny -> indicator\nz -- y\n");
  Json j = g;
  EXPECT_EQ(j.at("adjacency").at("y").at("parents"), Json::array({"x"}));
  EXPECT_EQ(j.get<CausalGraph>(), g);
}

TEST(Pc, IndependentVariablesGiveEmptyGraph) {
  const auto res = pc_build(gaussian(2000, 3, 11), {"a", "b", "c"});
  EXPECT_TRUE(res.graph.directed_edges().empty());
  EXPECT_TRUE(res.graph.undirected_edges().empty());
}

TEST(Pc, ChainSkeleton) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = pc_build(chain_data(seed), {"x", "y", "z"}).graph;
    ok += g.adjacent(0, 1) && g.adjacent(1, 2) && !g.adjacent(0, 2) && g.directed_edges().empty();
  }
  EXPECT_GE(ok, 11);
}

TEST(Pc, ColliderOriented) {
  for (auto rule : {VStructureRule::Standard, VStructureRule::Conservative, VStructureRule::Majority}) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Eigen::MatrixXd e = gaussian(2000, 3, seed + 40);
      Eigen::MatrixXd x(2000, 3);
      x.col(0) = e.col(0);
      x.col(1) = e.col(1);
      x.col(2) = 0.7 * e.col(0) + 0.7 * e.col(1) + e.col(2);
      PcOptions opt;
      opt.vstructures = rule;
      const auto g = pc_build(x, {"x", "y", "z"}, opt).graph;
      ok += g.directed(0, 2) && g.directed(1, 2) && !g.adjacent(0, 1);
    }
    EXPECT_GE(ok, 11) << to_string(rule);
  }
}

TEST(Pc, SinkEdgesPointIntoIndicator) {
  // a -> b -> indicator
  const Eigen::MatrixXd e = gaussian(2000, 3, 3);
  Eigen::MatrixXd x(2000, 3);
  x.col(0) = e.col(0);
  x.col(1) = 0.8 * x.col(0) + e.col(1);
  x.col(2) = 0.8 * x.col(1) + e.col(2);
  PcOptions opt;
  opt.sink = kIndicator;
  const auto g = pc_build(x, {"a", "b", kIndicator}, opt).graph;
  EXPECT_TRUE(g.directed(1, 2));
  // nothing points into b, so no rule can orient a - b
  EXPECT_TRUE(g.undirected(0, 1));
  EXPECT_TRUE(g.acyclic());
}

TEST(Pc, OutputAlwaysAcyclicAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Eigen::MatrixXd x = gaussian(500, 6, seed);
    x.col(3) += x.col(0) + x.col(1);
    x.col(4) += x.col(3) - x.col(2);
    x.col(5) += x.col(4);
    PcOptions opt;
    opt.sink = "m5";
    const auto a = pc_build(x, names(6), opt);
    EXPECT_TRUE(a.graph.acyclic());
    EXPECT_EQ(a.graph, pc_build(x, names(6), opt).graph);
  }
}

TEST(Meek, RuleOne) {
  CausalGraph g({"a", "b", "c"});
  g.add_directed(0, 1);
  g.add_undirected(1, 2);
  EXPECT_EQ(apply_meek_rules(g), 1u);
  EXPECT_TRUE(g.directed(1, 2));
}

TEST(Walk, Examples) {
  const auto single = graph_of("A -> indicator\n");
  EXPECT_EQ(random_walk(single, kIndicator, 5, 1), (std::vector<std::string>{kIndicator, "A"}));
  const auto chain = graph_of("A -> B\nB -> indicator\n");
  for (std::uint64_t s = 0; s < 5; ++s)
    EXPECT_EQ(random_walk(chain, kIndicator, 3, s), (std::vector<std::string>{kIndicator, "B", "A"}));
  EXPECT_EQ(random_walk(chain, kIndicator, 2, 0), (std::vector<std::string>{kIndicator, "B"}));
  const auto lonely = parse_edge_list("A -> B\n", {kIndicator});
  EXPECT_EQ(random_walk(lonely, kIndicator, 5, 0), (std::vector<std::string>{kIndicator}));
}

TEST(Walk, UndirectedPolicy) {
  const auto g = graph_of("A -- indicator\n");
  EXPECT_EQ(random_walk(g, kIndicator, 5, 0, UndirectedPolicy::Ignore).size(), 1u);
  EXPECT_EQ(random_walk(g, kIndicator, 5, 0, UndirectedPolicy::Traverse),
            (std::vector<std::string>{kIndicator, "A"}));
  // without self-avoidance the walk bounces along the undirected edge
  EXPECT_EQ(random_walk(g, kIndicator, 4, 0, UndirectedPolicy::Traverse, false).size(), 4u);
}

TEST(Localize, Diamond) {
  WalkOptions opt;
  opt.walks = 500;
  opt.seed = 3;
  const auto r = localize(graph_of("A -> B\nB -> indicator\nA -> C\nC -> indicator\n"), opt);
  ASSERT_EQ(r.causes.size(), 1u);
  EXPECT_EQ(r.causes[0].node, "A");
  EXPECT_EQ(r.causes[0].count, 500u);
}

TEST(Localize, TwoSourcesBinomial) {
  const auto g = graph_of("X -> indicator\nY -> indicator\n");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    WalkOptions opt;
    opt.seed = seed;
    const auto r = localize(g, opt);
    ASSERT_EQ(r.causes.size(), 2u);
    EXPECT_EQ(r.causes[0].count + r.causes[1].count, 500u);
    for (const auto& c : r.causes) EXPECT_LE(std::abs(static_cast<double>(c.count) - 250.0), 4.0 * std::sqrt(125.0));
    EXPECT_EQ(localize(g, opt).causes, r.causes);
  }
}

TEST(Localize, IsolatedIndicator) {
  const auto r = localize(parse_edge_list("A -> B\n", {kIndicator}));
  EXPECT_TRUE(r.causes.empty());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Localize, TerminalsAreAncestors) {
  const auto g = graph_of("a -> b\nb -> indicator\nc -> indicator\nd -> c\ne -> d\nf -> x\n");
  const auto r = localize(g);
  std::size_t total = 0;
  for (const auto& c : r.causes) {
    EXPECT_NE(c.node, kIndicator);
    EXPECT_TRUE(g.reachable(g.require(c.node), g.require(kIndicator))) << c.node;
    total += c.count;
  }
  EXPECT_LE(total, 500u);
}

TEST(Localize, CaseStudyGraph) {
  // numbered metrics; four chains end at the indicator
  const auto g = graph_of(
      "6 -> 5\n5 -> indicator\n17 -> indicator\n18 -> indicator\n14 -> 16\n16 -> 15\n15 -> indicator\n");
  const auto r = localize(g);
  std::set<std::string> top;
  for (const auto& c : r.causes) top.insert(c.node);
  EXPECT_EQ(top, (std::set<std::string>{"6", "17", "18", "14"}));
  for (std::size_t i = 1; i < r.causes.size(); ++i) {
    const auto& a = r.causes[i - 1];
    const auto& b = r.causes[i];
    EXPECT_TRUE(a.count > b.count || (a.count == b.count && a.node < b.node));
    EXPECT_EQ(b.rank, i + 1);
  }
}

TEST(Accuracy, Examples) {
  const std::set<std::string> truth{"A", "B"};
  const auto r = ranking({"A", "C", "B"});
  EXPECT_DOUBLE_EQ(ac_at_k(r, truth, 1), 1.0);
  EXPECT_DOUBLE_EQ(ac_at_k(r, truth, 2), 0.5);
  EXPECT_DOUBLE_EQ(ac_at_k(r, truth, 3), 1.0);
  EXPECT_NEAR(avg_at_k(r, truth, 3), 2.5 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(ac_at_k(ranking({"A"}), {"A"}, 1), 1.0);
  EXPECT_DOUBLE_EQ(avg_at_k(ranking({"A"}), {"A"}, 1), 1.0);
  EXPECT_DOUBLE_EQ(ac_at_k(ranking({"A", "Z"}), {"A", "B", "C", "D", "E", "F", "G", "H"}, 1), 1.0);
  EXPECT_EQ(code_of([&] { ac_at_k(r, {}, 1); }), ErrorCode::EmptyGroundTruth);
}

TEST(Accuracy, BoundsAndPerfectPrefix) {
  Rng rng(8);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<std::string> pool{"a", "b", "c", "d", "e", "f"};
    for (std::size_t i = pool.size() - 1; i > 0; --i) std::swap(pool[i], pool[rng.index(i + 1)]);
    std::vector<RankedCause> r;
    for (std::size_t i = 0; i < 1 + rng.index(6); ++i) r.push_back({pool[i], 0, i + 1});
    std::set<std::string> truth{"a", "c"};
    for (Index k = 1; k <= 6; ++k) {
      const double ac = ac_at_k(r, truth, k), avg = avg_at_k(r, truth, k);
      EXPECT_GE(ac, 0.0);
      EXPECT_LE(ac, 1.0);
      EXPECT_GE(avg, 0.0);
      EXPECT_LE(avg, 1.0);
    }
  }
  const auto perfect = ranking({"c", "a", "x"});
  for (Index k = 1; k <= 2; ++k) EXPECT_DOUBLE_EQ(ac_at_k(perfect, {"a", "c"}, k), 1.0);
}

TEST(Accuracy, RankingCsvRoundTrip) {
  const auto r = rank_counts({{"m1", 30}, {"m0", 30}, {"m9", 440}}, 500);
  EXPECT_EQ(r.causes[0].node, "m9");
  EXPECT_EQ(r.causes[1].node, "m0");
  const auto csv = ranking_to_csv(r.causes);
  EXPECT_EQ(csv.rfind("rank,node,count\n", 0), 0u);
  EXPECT_EQ(parse_ranking_csv(csv), r.causes);
}

TEST(Pc, SinkPropagatesThroughCollider) {
  // a -> b <- c, b -> indicator: the collider at b forces b -> indicator even without the sink
  const Eigen::MatrixXd e = gaussian(2000, 4, 12);
  Eigen::MatrixXd x(2000, 4);
  x.col(0) = e.col(0);
  x.col(2) = e.col(2);
  x.col(1) = 0.8 * x.col(0) + 0.8 * x.col(2) + e.col(1);
  x.col(3) = 0.8 * x.col(1) + e.col(3);
  const auto g = pc_build(x, {"a", "b", "c", kIndicator}).graph;
  EXPECT_TRUE(g.directed(0, 1));
  EXPECT_TRUE(g.directed(2, 1));
  EXPECT_TRUE(g.directed(1, 3));
}
