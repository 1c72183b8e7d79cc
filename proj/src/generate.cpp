#include "fired/error.hpp"
#include "fired/ingest.hpp"
#include "fired/random.hpp"

#include <algorithm>
#include <numeric>

namespace fired {

void GenConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (n_metrics < 1) fail("n_metrics must be >= 1");
  if (n_samples < 2) fail("n_samples must be >= 2");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) fail("edge_prob must lie in [0,1]");
  if (n_windows < 0) fail("n_windows must be >= 0");
  if (!(noise_sigma > 0.0)) fail("noise_sigma must be positive");
  if (!(magnitude >= 0.0)) fail("magnitude must be >= 0");
  if (interval <= 0) fail("interval must be positive");
  if (n_windows > 0) {
    if (window_length < 1) fail("window_length must be >= 1");
    // every window is preceded by at least window_length normal samples
    if (n_windows * 2 * window_length > n_samples) {
      fail("n_samples too small for " + std::to_string(n_windows) + " windows of length " +
           std::to_string(window_length));
    }
    if (!root_causes && (n_root_causes < 1 || n_root_causes > n_metrics)) {
      fail("n_root_causes must lie in [1, n_metrics]");
    }
  }
  if (edges) {
    for (const auto& [a, b] : *edges) {
      if (a < 0 || b < 0 || a >= n_metrics || b >= n_metrics || a == b) fail("invalid edge");
    }
    if (weights && weights->size() != edges->size()) fail("weights must match edges");
  }
  if (root_causes) {
    for (auto r : *root_causes) {
      if (r < 0 || r >= n_metrics) fail("root cause index out of range");
    }
  }
}

void to_json(Json& j, const GenConfig& c) {
  j = Json{{"n_metrics", c.n_metrics},
           {"n_samples", c.n_samples},
           {"edge_prob", c.edge_prob},
           {"n_windows", c.n_windows},
           {"window_length", c.window_length},
           {"layout", c.layout == WindowLayout::Periodic ? "periodic" : "random"},
           {"magnitude", c.magnitude},
           {"noise_sigma", c.noise_sigma},
           {"n_root_causes", c.n_root_causes},
           {"interval", c.interval},
           {"start_time", c.start_time}};
  if (c.edges) j["edges"] = *c.edges;
  if (c.root_causes) j["root_causes"] = *c.root_causes;
  if (c.weights) j["weights"] = *c.weights;
}

void from_json(const Json& j, GenConfig& c) {
  c = GenConfig{};
  c.n_metrics = j.value("n_metrics", c.n_metrics);
  c.n_samples = j.value("n_samples", c.n_samples);
  c.edge_prob = j.value("edge_prob", c.edge_prob);
  c.n_windows = j.value("n_windows", c.n_windows);
  c.window_length = j.value("window_length", c.window_length);
  const auto layout = j.value("layout", std::string("random"));
  if (layout == "periodic") {
    c.layout = WindowLayout::Periodic;
  } else if (layout == "random") {
    c.layout = WindowLayout::Random;
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown window layout '" + layout + "'");
  }
  c.magnitude = j.value("magnitude", c.magnitude);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.n_root_causes = j.value("n_root_causes", c.n_root_causes);
  c.interval = j.value("interval", c.interval);
  c.start_time = j.value("start_time", c.start_time);
  if (j.contains("edges")) c.edges = j.at("edges").get<std::vector<std::pair<Index, Index>>>();
  if (j.contains("root_causes")) c.root_causes = j.at("root_causes").get<std::vector<Index>>();
  if (j.contains("weights")) c.weights = j.at("weights").get<std::vector<double>>();
}

namespace {

struct Edge {
  Index from;
  Index to;
  double weight;
};

// Kahn's algorithm; empty result means the edge set has a cycle.
std::vector<Index> topological_order(Index n, const std::vector<Edge>& edges) {
  std::vector<Index> indegree(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
  for (const auto& e : edges) {
    ++indegree[static_cast<std::size_t>(e.to)];
    out[static_cast<std::size_t>(e.from)].push_back(e.to);
  }
  std::vector<Index> order;
  std::vector<Index> ready;
  for (Index v = 0; v < n; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
  }
  while (!ready.empty()) {
    const Index v = ready.front();
    ready.erase(ready.begin());
    order.push_back(v);
    for (Index w : out[static_cast<std::size_t>(v)]) {
      if (--indegree[static_cast<std::size_t>(w)] == 0) ready.push_back(w);
    }
  }
  if (static_cast<Index>(order.size()) != n) return {};
  return order;
}

double draw_weight(Rng& rng) {
  const double magnitude = rng.uniform(0.5, 1.5);
  return rng.uniform() < 0.5 ? -magnitude : magnitude;
}

}  // namespace

Generated generate(const GenConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const Index n = config.n_metrics;
  const Index d = config.n_samples;

  std::vector<Edge> edges;
  std::vector<Index> order;
  if (config.edges) {
    for (std::size_t e = 0; e < config.edges->size(); ++e) {
      const auto [a, b] = (*config.edges)[e];
      const double w = config.weights ? (*config.weights)[e] : draw_weight(rng);
      edges.push_back({a, b, w});
    }
    order = topological_order(n, edges);
    if (order.empty()) throw Error(ErrorCode::InvalidConfig, "edge list contains a cycle");
  } else {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(order.begin(), order.end());
    for (Index a = 0; a < n; ++a) {
      for (Index b = a + 1; b < n; ++b) {
        if (rng.uniform() < config.edge_prob) {
          edges.push_back({order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)],
                           draw_weight(rng)});
        }
      }
    }
  }

  std::vector<std::vector<std::pair<Index, double>>> parents(static_cast<std::size_t>(n));
  for (const auto& e : edges) parents[static_cast<std::size_t>(e.to)].emplace_back(e.from, e.weight);

  std::vector<Index> roots;
  if (config.n_windows > 0) {
    if (config.root_causes) {
      roots = *config.root_causes;
    } else {
      // faults originate at DAG sources; non-sources fill in only when there
      // are fewer sources than requested
      std::vector<Index> sources;
      std::vector<Index> others;
      for (Index v : order) {
        (parents[static_cast<std::size_t>(v)].empty() ? sources : others).push_back(v);
      }
      rng.shuffle(sources.begin(), sources.end());
      roots.assign(sources.begin(),
                   sources.begin() + std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(sources.size()),
                                                              config.n_root_causes));
      for (Index v : others) {
        if (static_cast<Index>(roots.size()) >= config.n_root_causes) break;
        roots.push_back(v);
      }
      std::sort(roots.begin(), roots.end());
    }
  }

  std::vector<std::uint8_t> labels(static_cast<std::size_t>(d), 0);
  std::vector<std::pair<Index, Index>> windows;  // [begin, end) rows
  const Index L = config.window_length;
  if (config.n_windows > 0) {
    if (config.layout == WindowLayout::Periodic) {
      const Index period = d / config.n_windows;
      for (Index i = 0; i < config.n_windows; ++i) {
        const Index begin = i * period + (period - L);
        windows.emplace_back(begin, begin + L);
      }
    } else {
      const Index free = d - config.n_windows * 2 * L;
      std::vector<Index> offsets;
      for (Index i = 0; i < config.n_windows; ++i) {
        offsets.push_back(static_cast<Index>(rng.index(static_cast<std::uint64_t>(free) + 1)));
      }
      std::sort(offsets.begin(), offsets.end());
      for (Index i = 0; i < config.n_windows; ++i) {
        const Index begin = offsets[static_cast<std::size_t>(i)] + i * 2 * L + L;
        windows.emplace_back(begin, begin + L);
      }
    }
    for (const auto& [b, e] : windows) {
      std::fill(labels.begin() + b, labels.begin() + e, std::uint8_t{1});
    }
  }

  std::vector<bool> is_root(static_cast<std::size_t>(n), false);
  for (Index r : roots) is_root[static_cast<std::size_t>(r)] = true;
  const double shift = config.magnitude * config.noise_sigma;

  Eigen::MatrixXd values(d, n);
  for (Index t = 0; t < d; ++t) {
    const bool faulty = labels[static_cast<std::size_t>(t)] == 1;
    for (Index v : order) {
      double x = config.noise_sigma * rng.normal();
      for (const auto& [p, w] : parents[static_cast<std::size_t>(v)]) x += w * values(t, p);
      if (faulty && is_root[static_cast<std::size_t>(v)]) x += shift;
      values(t, v) = x;
    }
  }

  std::vector<Timestamp> ts(static_cast<std::size_t>(d));
  for (Index t = 0; t < d; ++t) ts[static_cast<std::size_t>(t)] = config.start_time + t * config.interval;
  std::vector<std::string> names;
  for (Index v = 0; v < n; ++v) names.push_back("m" + std::to_string(v));

  Generated out;
  for (const auto& e : edges) {
    out.truth.edges.emplace_back(names[static_cast<std::size_t>(e.from)], names[static_cast<std::size_t>(e.to)]);
    out.weights.push_back(e.weight);
  }
  for (Index r : roots) out.truth.root_causes.push_back(names[static_cast<std::size_t>(r)]);
  for (const auto& [b, e] : windows) {
    out.truth.windows.push_back({ts[static_cast<std::size_t>(b)], ts[static_cast<std::size_t>(e - 1)]});
  }
  out.frame = MetricFrame(ts, std::move(values), std::move(names), config.interval);
  out.labels = LabelSeries(std::move(ts), std::move(labels));
  return out;
}

}  // namespace fired
