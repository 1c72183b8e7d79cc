#include "fired/rca.hpp"

#include "fired/error.hpp"
#include "fired/random.hpp"

#include <algorithm>
#include <sstream>

namespace fired {

std::string to_string(UndirectedPolicy p) { return p == UndirectedPolicy::Traverse ? "traverse" : "ignore"; }

UndirectedPolicy undirected_policy_from_string(const std::string& s) {
  if (s == "traverse") return UndirectedPolicy::Traverse;
  if (s == "ignore") return UndirectedPolicy::Ignore;
  throw Error(ErrorCode::InvalidConfig, "unknown undirected-edge policy '" + s + "'");
}

std::vector<Index> walk_predecessors(const CausalGraph& g, Index v, UndirectedPolicy policy) {
  std::vector<Index> out;
  for (Index w = 0; w < g.size(); ++w) {
    if (g.directed(w, v) || (policy == UndirectedPolicy::Traverse && g.undirected(w, v))) out.push_back(w);
  }
  return out;
}

namespace {

std::vector<Index> walk_indices(const CausalGraph& g, Index start, Index length, std::uint64_t seed,
                                UndirectedPolicy policy, bool self_avoiding) {
  Rng rng(seed);
  std::vector<Index> path{start};
  std::vector<char> visited(static_cast<std::size_t>(g.size()), 0);
  visited[static_cast<std::size_t>(start)] = 1;
  while (static_cast<Index>(path.size()) < length) {
    auto next = walk_predecessors(g, path.back(), policy);
    if (self_avoiding) {
      std::erase_if(next, [&](Index w) { return visited[static_cast<std::size_t>(w)] != 0; });
    }
    if (next.empty()) break;
    const Index w = next[static_cast<std::size_t>(rng.index(next.size()))];
    visited[static_cast<std::size_t>(w)] = 1;
    path.push_back(w);
  }
  return path;
}

}  // namespace

std::vector<std::string> random_walk(const CausalGraph& g, const std::string& start, Index length,
                                     std::uint64_t seed, UndirectedPolicy policy, bool self_avoiding) {
  if (length < 1) throw Error(ErrorCode::InvalidConfig, "walk length must be >= 1");
  std::vector<std::string> out;
  for (Index v : walk_indices(g, g.require(start), length, seed, policy, self_avoiding)) {
    out.push_back(g.nodes()[static_cast<std::size_t>(v)]);
  }
  return out;
}

RootCauseRanking rank_counts(const std::map<std::string, std::size_t>& counts, Index walks) {
  RootCauseRanking out;
  out.walks = walks;
  for (const auto& [node, count] : counts) out.causes.push_back({node, count, 0});
  std::stable_sort(out.causes.begin(), out.causes.end(),
                   [](const RankedCause& a, const RankedCause& b) { return a.count > b.count; });
  for (std::size_t i = 0; i < out.causes.size(); ++i) out.causes[i].rank = i + 1;
  return out;
}

RootCauseRanking localize(const CausalGraph& g, const WalkOptions& options) {
  if (options.walks < 1) throw Error(ErrorCode::InvalidConfig, "walk count must be >= 1");
  const Index start = g.require(options.start);
  const Index length = options.length > 0 ? options.length : g.size();
  std::map<std::string, std::size_t> counts;
  for (Index t = 0; t < options.walks; ++t) {
    const auto path = walk_indices(g, start, length, derive_seed(options.seed, static_cast<std::uint64_t>(t)),
                                   options.undirected, options.self_avoiding);
    if (path.size() < 2) continue;
    ++counts[g.nodes()[static_cast<std::size_t>(path.back())]];
  }
  RootCauseRanking out = rank_counts(counts, options.walks);
  if (walk_predecessors(g, start, options.undirected).empty()) {
    out.warnings.push_back("NoPredecessors: '" + options.start + "' has no predecessors; ranking is empty");
  }
  return out;
}

namespace {

void check_metric_args(const std::set<std::string>& truth, Index k) {
  if (truth.empty()) throw Error(ErrorCode::EmptyGroundTruth, "root cause set is empty");
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
}

double ac_unchecked(const std::vector<RankedCause>& ranking, const std::set<std::string>& truth, Index k) {
  const auto top = std::min(ranking.size(), static_cast<std::size_t>(k));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < top; ++i) hits += truth.count(ranking[i].node);
  return static_cast<double>(hits) / static_cast<double>(std::min(static_cast<std::size_t>(k), truth.size()));
}

}  // namespace

double ac_at_k(const std::vector<RankedCause>& ranking, const std::set<std::string>& truth, Index k) {
  check_metric_args(truth, k);
  return ac_unchecked(ranking, truth, k);
}

double avg_at_k(const std::vector<RankedCause>& ranking, const std::set<std::string>& truth, Index k) {
  check_metric_args(truth, k);
  double total = 0.0;
  for (Index j = 1; j <= k; ++j) total += ac_unchecked(ranking, truth, j);
  return total / static_cast<double>(k);
}

std::string ranking_to_csv(const std::vector<RankedCause>& ranking) {
  std::ostringstream out;
  out << "rank,node,count\n";
  for (const auto& r : ranking) out << r.rank << ',' << r.node << ',' << r.count << '\n';
  return out.str();
}

std::vector<RankedCause> parse_ranking_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("rank,node,count", 0) != 0) {
    throw Error(ErrorCode::ParseError, "ranking CSV must start with 'rank,node,count'");
  }
  std::vector<RankedCause> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.rfind(',');
    if (c1 == std::string::npos || c1 == c2) {
      throw Error(ErrorCode::ParseError, "ranking CSV line " + std::to_string(line_no));
    }
    try {
      out.push_back({line.substr(c1 + 1, c2 - c1 - 1), std::stoul(line.substr(c2 + 1)), std::stoul(line.substr(0, c1))});
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "ranking CSV line " + std::to_string(line_no));
    }
  }
  return out;
}

}  // namespace fired
