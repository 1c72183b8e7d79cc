#pragma once

#include "fired/core.hpp"
#include "fired/serialize.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fired {

inline constexpr const char* kIndicator = "indicator";

struct CiResult {
  bool independent = true;
  double partial = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
  bool regularized = false;
};

/// Fisher-z partial-correlation test backed by a precomputed correlation matrix.
class CiTest {
 public:
  CiTest(const Eigen::MatrixXd& data, double alpha = 0.05);
  CiTest(Eigen::MatrixXd correlation, Index samples, double alpha);

  CiResult operator()(Index i, Index j, std::span<const Index> s) const;

  /// Partial correlation of columns i, j given s; sets `regularized` when
  /// the submatrix needed a ridge.
  double partial_correlation(Index i, Index j, std::span<const Index> s, bool* regularized = nullptr) const;

  Index samples() const { return samples_; }
  double alpha() const { return alpha_; }
  double critical_value() const { return critical_; }
  const Eigen::MatrixXd& correlation() const { return corr_; }

 private:
  Eigen::MatrixXd corr_;
  Index samples_;
  double alpha_;
  double critical_;
};

CiResult ci_test(const Eigen::MatrixXd& data, Index i, Index j, std::span<const Index> s, double alpha = 0.05);

/// Partially directed graph. Directed and undirected edge sets are kept
/// disjoint; the directed part is acyclic as long as callers orient through
/// `orient`.
class CausalGraph {
 public:
  CausalGraph() = default;
  explicit CausalGraph(std::vector<std::string> nodes);

  Index size() const { return static_cast<Index>(nodes_.size()); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  std::optional<Index> index(const std::string& name) const;
  Index require(const std::string& name) const;

  bool directed(Index from, Index to) const { return at(from, to) == kDirected; }
  bool undirected(Index a, Index b) const { return at(a, b) == kUndirected; }
  bool adjacent(Index a, Index b) const { return at(a, b) != kNone || at(b, a) != kNone; }

  void add_undirected(Index a, Index b);
  void add_directed(Index from, Index to);
  void remove_edge(Index a, Index b);
  /// Turns the undirected edge a--b into from->to. Returns false (and leaves
  /// the edge untouched) if it is not undirected or would close a cycle.
  bool orient(Index from, Index to);

  /// True if a directed path from -> ... -> to exists.
  bool reachable(Index from, Index to) const;
  bool acyclic() const;

  std::vector<Index> adjacents(Index v) const;
  std::vector<Index> parents(Index v) const;
  std::vector<Index> undirected_neighbors(Index v) const;

  /// Sorted (by node name) edge lists.
  std::vector<std::pair<std::string, std::string>> directed_edges() const;
  std::vector<std::pair<std::string, std::string>> undirected_edges() const;

  friend bool operator==(const CausalGraph&, const CausalGraph&) = default;

 private:
  static constexpr std::uint8_t kNone = 0;
  static constexpr std::uint8_t kDirected = 1;
  static constexpr std::uint8_t kUndirected = 2;

  std::uint8_t at(Index a, Index b) const { return marks_[static_cast<std::size_t>(a * size() + b)]; }
  std::uint8_t& at(Index a, Index b) { return marks_[static_cast<std::size_t>(a * size() + b)]; }
  void check(Index a, Index b) const;

  std::vector<std::string> nodes_;
  std::vector<std::uint8_t> marks_;
};

std::string to_edge_list(const CausalGraph& g);
/// Nodes are those named by edges (and `extra_nodes`), in sorted order.
CausalGraph parse_edge_list(const std::string& text, const std::vector<std::string>& extra_nodes = {});
void to_json(Json& j, const CausalGraph& g);
void from_json(const Json& j, CausalGraph& g);

/// How unshielded triples i - k - j become colliders. Standard uses the first
/// separating set found; Conservative and Majority re-test all subsets of the
/// final adjacency sets and orient when none / fewer than half of the
/// separating sets contain k.
enum class VStructureRule { Standard, Conservative, Majority };
std::string to_string(VStructureRule r);
VStructureRule vstructure_rule_from_string(const std::string& s);

struct PcOptions {
  double alpha = 0.05;
  VStructureRule vstructures = VStructureRule::Majority;
  /// -1 for no limit.
  Index max_level = -1;
  /// Node whose incident edges are oriented into it before v-structure
  /// detection (the failure indicator cannot cause metrics).
  std::optional<std::string> sink;
};

struct PcResult {
  CausalGraph graph;
  std::map<std::pair<Index, Index>, std::vector<Index>> sepsets;
  std::size_t tests = 0;
  std::vector<std::string> warnings;
};

/// PC-stable skeleton search, v-structures, then Meek rules R1-R4.
PcResult pc_build(const Eigen::MatrixXd& data, const std::vector<std::string>& names,
                  const PcOptions& options = {});
/// Orientation phase only, on a given skeleton and separating sets.
void orient_graph(CausalGraph& g, const std::map<std::pair<Index, Index>, std::vector<Index>>& sepsets,
                  const std::optional<std::string>& sink);
/// Orientation phase with an arbitrary collider decision for unshielded i - k - j.
void orient_graph(CausalGraph& g, const std::function<bool(Index i, Index k, Index j)>& is_collider,
                  const std::optional<std::string>& sink);
/// Repeatedly applies Meek rules R1-R4; returns the number of orientations.
std::size_t apply_meek_rules(CausalGraph& g);

enum class UndirectedPolicy { Traverse, Ignore };
std::string to_string(UndirectedPolicy p);
UndirectedPolicy undirected_policy_from_string(const std::string& s);

struct WalkOptions {
  Index walks = 500;
  /// 0 means the node count.
  Index length = 0;
  UndirectedPolicy undirected = UndirectedPolicy::Ignore;
  bool self_avoiding = true;
  std::uint64_t seed = 0;
  std::string start = kIndicator;
};

/// Candidate next steps from v.
std::vector<Index> walk_predecessors(const CausalGraph& g, Index v, UndirectedPolicy policy);

std::vector<std::string> random_walk(const CausalGraph& g, const std::string& start, Index length,
                                     std::uint64_t seed, UndirectedPolicy policy = UndirectedPolicy::Ignore,
                                     bool self_avoiding = true);

struct RootCauseRanking {
  std::vector<RankedCause> causes;
  Index walks = 0;
  std::vector<std::string> warnings;
};

RootCauseRanking localize(const CausalGraph& g, const WalkOptions& options = {});
/// Orders counts by count descending then name ascending and assigns ranks from 1.
RootCauseRanking rank_counts(const std::map<std::string, std::size_t>& counts, Index walks);

double ac_at_k(const std::vector<RankedCause>& ranking, const std::set<std::string>& truth, Index k);
double avg_at_k(const std::vector<RankedCause>& ranking, const std::set<std::string>& truth, Index k);

std::string ranking_to_csv(const std::vector<RankedCause>& ranking);
std::vector<RankedCause> parse_ranking_csv(const std::string& text);

}  // namespace fired
