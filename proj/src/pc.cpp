#include "fired/rca.hpp"

#include "fired/error.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>

namespace fired {

namespace {

std::pair<Index, Index> key(Index a, Index b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

// Calls visit(subset) for every size-k subset of `pool` in lexicographic
// order; stops early when visit returns true.
template <typename Visit>
bool for_each_subset(const std::vector<Index>& pool, Index k, Visit&& visit) {
  const auto n = static_cast<Index>(pool.size());
  if (k > n) return false;
  std::vector<Index> pick(static_cast<std::size_t>(k));
  std::iota(pick.begin(), pick.end(), Index{0});
  std::vector<Index> subset(static_cast<std::size_t>(k));
  while (true) {
    for (Index i = 0; i < k; ++i) subset[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
    if (visit(subset)) return true;
    Index i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return false;
    ++pick[static_cast<std::size_t>(i)];
    for (Index m = i + 1; m < k; ++m) pick[static_cast<std::size_t>(m)] = pick[static_cast<std::size_t>(m - 1)] + 1;
  }
}

bool rule1(CausalGraph& g, Index b, Index c) {
  // a -> b, b -- c, a and c nonadjacent  =>  b -> c
  for (Index a : g.parents(b)) {
    if (a != c && !g.adjacent(a, c)) return g.orient(b, c);
  }
  return false;
}

bool rule2(CausalGraph& g, Index a, Index c) {
  // a -> b -> c, a -- c  =>  a -> c
  for (Index b : g.parents(c)) {
    if (g.directed(a, b)) return g.orient(a, c);
  }
  return false;
}

bool rule3(CausalGraph& g, Index a, Index b) {
  // a -- c -> b, a -- d -> b, c and d nonadjacent  =>  a -> b
  const auto und = g.undirected_neighbors(a);
  for (std::size_t x = 0; x < und.size(); ++x) {
    const Index c = und[x];
    if (c == b || !g.directed(c, b)) continue;
    for (std::size_t y = x + 1; y < und.size(); ++y) {
      const Index d = und[y];
      if (d == b || !g.directed(d, b) || g.adjacent(c, d)) continue;
      return g.orient(a, b);
    }
  }
  return false;
}

bool rule4(CausalGraph& g, Index a, Index b) {
  // a -- d, d -> b, c -> d, a adjacent to c, c and b nonadjacent  =>  a -> b
  for (Index d : g.parents(b)) {
    if (!g.undirected(a, d)) continue;
    for (Index c : g.parents(d)) {
      if (c != a && c != b && g.adjacent(a, c) && !g.adjacent(c, b)) return g.orient(a, b);
    }
  }
  return false;
}

}  // namespace

std::size_t apply_meek_rules(CausalGraph& g) {
  std::size_t oriented = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (Index a = 0; a < g.size(); ++a) {
      for (Index b = 0; b < g.size(); ++b) {
        if (a == b || !g.undirected(a, b)) continue;
        if (rule1(g, a, b) || rule2(g, a, b) || rule3(g, a, b) || rule4(g, a, b)) {
          ++oriented;
          changed = true;
        }
      }
    }
  }
  return oriented;
}

std::string to_string(VStructureRule r) {
  switch (r) {
    case VStructureRule::Standard: return "standard";
    case VStructureRule::Conservative: return "conservative";
    case VStructureRule::Majority: return "majority";
  }
  return "majority";
}

VStructureRule vstructure_rule_from_string(const std::string& s) {
  if (s == "standard") return VStructureRule::Standard;
  if (s == "conservative") return VStructureRule::Conservative;
  if (s == "majority") return VStructureRule::Majority;
  throw Error(ErrorCode::InvalidConfig, "unknown v-structure rule '" + s + "'");
}

void orient_graph(CausalGraph& g, const std::function<bool(Index, Index, Index)>& is_collider,
                  const std::optional<std::string>& sink) {
  if (sink) {
    if (const auto s = g.index(*sink)) {
      for (Index v : g.undirected_neighbors(*s)) g.orient(v, *s);
    }
  }
  // Decide every triple on the unoriented skeleton first, then orient.
  std::vector<std::array<Index, 3>> colliders;
  const Index n = g.size();
  for (Index k = 0; k < n; ++k) {
    const auto adj = g.adjacents(k);
    for (std::size_t x = 0; x < adj.size(); ++x) {
      for (std::size_t y = x + 1; y < adj.size(); ++y) {
        if (!g.adjacent(adj[x], adj[y]) && is_collider(adj[x], k, adj[y])) colliders.push_back({adj[x], k, adj[y]});
      }
    }
  }
  for (const auto& [i, k, j] : colliders) {
    // Edges already oriented the other way stay as they are.
    if (g.undirected(i, k)) g.orient(i, k);
    if (g.undirected(j, k)) g.orient(j, k);
  }
  apply_meek_rules(g);
}

void orient_graph(CausalGraph& g, const std::map<std::pair<Index, Index>, std::vector<Index>>& sepsets,
                  const std::optional<std::string>& sink) {
  orient_graph(
      g,
      [&](Index i, Index k, Index j) {
        const auto it = sepsets.find(key(i, j));
        return it == sepsets.end() || std::find(it->second.begin(), it->second.end(), k) == it->second.end();
      },
      sink);
}

PcResult pc_build(const Eigen::MatrixXd& data, const std::vector<std::string>& names, const PcOptions& options) {
  if (static_cast<Index>(names.size()) != data.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "names vs data columns");
  }
  // Nodes are kept in name order so that the iteration order is fixed.
  std::vector<Index> order(names.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return names[static_cast<std::size_t>(a)] < names[static_cast<std::size_t>(b)]; });
  std::vector<std::string> sorted_names;
  Eigen::MatrixXd sorted(data.rows(), data.cols());
  for (std::size_t c = 0; c < order.size(); ++c) {
    sorted_names.push_back(names[static_cast<std::size_t>(order[c])]);
    sorted.col(static_cast<Index>(c)) = data.col(order[c]);
  }

  PcResult result{CausalGraph(sorted_names), {}, 0, {}};
  CausalGraph& g = result.graph;
  const Index n = g.size();
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) g.add_undirected(a, b);
  }

  const CiTest test(sorted, options.alpha);
  bool regularized = false;
  for (Index level = 0; options.max_level < 0 || level <= options.max_level; ++level) {
    if (level > data.rows() - 4) break;
    std::vector<std::vector<Index>> frozen;
    bool any = false;
    for (Index v = 0; v < n; ++v) {
      frozen.push_back(g.adjacents(v));
      any = any || static_cast<Index>(frozen.back().size()) - 1 >= level;
    }
    if (!any) break;
    for (Index i = 0; i < n; ++i) {
      for (Index j : frozen[static_cast<std::size_t>(i)]) {
        if (!g.adjacent(i, j)) continue;
        std::vector<Index> pool;
        for (Index v : frozen[static_cast<std::size_t>(i)]) {
          if (v != j) pool.push_back(v);
        }
        for_each_subset(pool, level, [&](const std::vector<Index>& s) {
          ++result.tests;
          const CiResult r = test(i, j, s);
          regularized = regularized || r.regularized;
          if (!r.independent) return false;
          g.remove_edge(i, j);
          result.sepsets.emplace(key(i, j), s);
          return true;
        });
      }
    }
  }
  if (options.vstructures == VStructureRule::Standard) {
    orient_graph(g, result.sepsets, options.sink);
  } else {
    const CausalGraph skeleton = g;
    const Index max_size = std::max<Index>(0, std::min<Index>(n - 2, data.rows() - 4));
    auto collider = [&](Index i, Index k, Index j) {
      std::size_t separating = 0;
      std::size_t containing = 0;
      std::set<std::vector<Index>> seen;
      for (Index side : {i, j}) {
        std::vector<Index> pool;
        for (Index v : skeleton.adjacents(side)) {
          if (v != i && v != j) pool.push_back(v);
        }
        for (Index size = 0; size <= std::min<Index>(max_size, static_cast<Index>(pool.size())); ++size) {
          for_each_subset(pool, size, [&](const std::vector<Index>& s) {
            if (!seen.insert(s).second) return false;
            ++result.tests;
            const CiResult r = test(i, j, s);
            regularized = regularized || r.regularized;
            if (r.independent) {
              ++separating;
              containing += std::find(s.begin(), s.end(), k) != s.end() ? 1 : 0;
            }
            return false;
          });
        }
      }
      if (separating == 0) {
        const auto& s = result.sepsets.at(key(i, j));
        return std::find(s.begin(), s.end(), k) == s.end();
      }
      if (options.vstructures == VStructureRule::Conservative) return containing == 0;
      return 2 * containing < separating;
    };
    orient_graph(g, collider, options.sink);
  }
  if (regularized) result.warnings.push_back("SingularSubmatrix: ridge-regularized at least one CI test");
  return result;
}

}  // namespace fired
