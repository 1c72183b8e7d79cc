#include "fired/rca.hpp"

#include "fired/error.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace fired {

CausalGraph::CausalGraph(std::vector<std::string> nodes) : nodes_(std::move(nodes)) {
  std::set<std::string> seen;
  for (const auto& n : nodes_) {
    if (!seen.insert(n).second) throw Error(ErrorCode::DuplicateName, "graph node '" + n + "'");
  }
  marks_.assign(nodes_.size() * nodes_.size(), kNone);
}

std::optional<Index> CausalGraph::index(const std::string& name) const {
  const auto it = std::find(nodes_.begin(), nodes_.end(), name);
  if (it == nodes_.end()) return std::nullopt;
  return static_cast<Index>(it - nodes_.begin());
}

Index CausalGraph::require(const std::string& name) const {
  const auto i = index(name);
  if (!i) throw Error(ErrorCode::InvalidConfig, "unknown graph node '" + name + "'");
  return *i;
}

void CausalGraph::check(Index a, Index b) const {
  if (a < 0 || b < 0 || a >= size() || b >= size()) throw Error(ErrorCode::InvalidConfig, "node index out of range");
  if (a == b) throw Error(ErrorCode::InvalidConfig, "self-loop on '" + nodes_[static_cast<std::size_t>(a)] + "'");
}

void CausalGraph::add_undirected(Index a, Index b) {
  check(a, b);
  at(a, b) = kUndirected;
  at(b, a) = kUndirected;
}

void CausalGraph::add_directed(Index from, Index to) {
  check(from, to);
  if (reachable(to, from)) {
    throw Error(ErrorCode::InvalidConfig, "edge " + nodes_[static_cast<std::size_t>(from)] + " -> " +
                                              nodes_[static_cast<std::size_t>(to)] + " closes a cycle");
  }
  at(from, to) = kDirected;
  at(to, from) = kNone;
}

void CausalGraph::remove_edge(Index a, Index b) {
  check(a, b);
  at(a, b) = kNone;
  at(b, a) = kNone;
}

bool CausalGraph::orient(Index from, Index to) {
  check(from, to);
  if (!undirected(from, to) || reachable(to, from)) return false;
  at(from, to) = kDirected;
  at(to, from) = kNone;
  return true;
}

bool CausalGraph::reachable(Index from, Index to) const {
  std::vector<char> seen(static_cast<std::size_t>(size()), 0);
  std::vector<Index> stack{from};
  seen[static_cast<std::size_t>(from)] = 1;
  while (!stack.empty()) {
    const Index v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    for (Index w = 0; w < size(); ++w) {
      if (directed(v, w) && !seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        stack.push_back(w);
      }
    }
  }
  return false;
}

bool CausalGraph::acyclic() const {
  const Index n = size();
  std::vector<Index> indegree(static_cast<std::size_t>(n), 0);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) indegree[static_cast<std::size_t>(b)] += directed(a, b) ? 1 : 0;
  }
  std::vector<Index> ready;
  for (Index v = 0; v < n; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
  }
  Index visited = 0;
  while (!ready.empty()) {
    const Index v = ready.back();
    ready.pop_back();
    ++visited;
    for (Index w = 0; w < n; ++w) {
      if (directed(v, w) && --indegree[static_cast<std::size_t>(w)] == 0) ready.push_back(w);
    }
  }
  return visited == n;
}

std::vector<Index> CausalGraph::adjacents(Index v) const {
  std::vector<Index> out;
  for (Index w = 0; w < size(); ++w) {
    if (w != v && adjacent(v, w)) out.push_back(w);
  }
  return out;
}

std::vector<Index> CausalGraph::parents(Index v) const {
  std::vector<Index> out;
  for (Index w = 0; w < size(); ++w) {
    if (directed(w, v)) out.push_back(w);
  }
  return out;
}

std::vector<Index> CausalGraph::undirected_neighbors(Index v) const {
  std::vector<Index> out;
  for (Index w = 0; w < size(); ++w) {
    if (undirected(v, w)) out.push_back(w);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> CausalGraph::directed_edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (Index a = 0; a < size(); ++a) {
    for (Index b = 0; b < size(); ++b) {
      if (directed(a, b)) out.emplace_back(nodes_[static_cast<std::size_t>(a)], nodes_[static_cast<std::size_t>(b)]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<std::string, std::string>> CausalGraph::undirected_edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (Index a = 0; a < size(); ++a) {
    for (Index b = a + 1; b < size(); ++b) {
      if (!undirected(a, b)) continue;
      auto x = nodes_[static_cast<std::size_t>(a)];
      auto y = nodes_[static_cast<std::size_t>(b)];
      if (y < x) std::swap(x, y);
      out.emplace_back(std::move(x), std::move(y));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string to_edge_list(const CausalGraph& g) {
  std::ostringstream out;
  for (const auto& [a, b] : g.directed_edges()) out << a << " -> " << b << '\n';
  for (const auto& [a, b] : g.undirected_edges()) out << a << " -- " << b << '\n';
  return out.str();
}

CausalGraph parse_edge_list(const std::string& text, const std::vector<std::string>& extra_nodes) {
  struct Edge {
    std::string a, b;
    bool directed;
  };
  std::vector<Edge> edges;
  std::set<std::string> names(extra_nodes.begin(), extra_nodes.end());
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string{};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    bool directed = true;
    auto pos = line.find("->");
    if (pos == std::string::npos) {
      pos = line.find("--");
      directed = false;
    }
    if (pos == std::string::npos) {
      throw Error(ErrorCode::ParseError, "edge list line " + std::to_string(line_no) + ": no '->' or '--'");
    }
    Edge e{trim(line.substr(0, pos)), trim(line.substr(pos + 2)), directed};
    if (e.a.empty() || e.b.empty()) {
      throw Error(ErrorCode::ParseError, "edge list line " + std::to_string(line_no) + ": empty node name");
    }
    names.insert(e.a);
    names.insert(e.b);
    edges.push_back(std::move(e));
  }
  CausalGraph g(std::vector<std::string>(names.begin(), names.end()));
  for (const auto& e : edges) {
    const Index a = g.require(e.a);
    const Index b = g.require(e.b);
    if (g.adjacent(a, b)) throw Error(ErrorCode::ParseError, "duplicate edge " + e.a + " / " + e.b);
    if (e.directed) {
      g.add_directed(a, b);
    } else {
      g.add_undirected(a, b);
    }
  }
  return g;
}

void to_json(Json& j, const CausalGraph& g) {
  Json adjacency = Json::object();
  auto names = [&](const std::vector<Index>& idx) {
    std::vector<std::string> out;
    for (Index i : idx) out.push_back(g.nodes()[static_cast<std::size_t>(i)]);
    return out;
  };
  for (Index v = 0; v < g.size(); ++v) {
    std::vector<Index> children;
    for (Index w = 0; w < g.size(); ++w) {
      if (g.directed(v, w)) children.push_back(w);
    }
    adjacency[g.nodes()[static_cast<std::size_t>(v)]] = Json{{"parents", names(g.parents(v))},
                                                            {"children", names(children)},
                                                            {"undirected", names(g.undirected_neighbors(v))}};
  }
  j = Json{{"nodes", g.nodes()}, {"adjacency", std::move(adjacency)}};
}

void from_json(const Json& j, CausalGraph& g) {
  try {
    g = CausalGraph(j.at("nodes").get<std::vector<std::string>>());
    for (const auto& [name, entry] : j.at("adjacency").items()) {
      const Index v = g.require(name);
      for (const auto& c : entry.at("children").get<std::vector<std::string>>()) g.add_directed(v, g.require(c));
      for (const auto& u : entry.at("undirected").get<std::vector<std::string>>()) {
        const Index w = g.require(u);
        if (!g.undirected(v, w)) g.add_undirected(v, w);
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("graph: ") + e.what());
  }
}

}  // namespace fired
