#include "fired/detectors.hpp"
#include "fired/error.hpp"
#include "fired/random.hpp"

#include <cmath>
#include <numeric>

namespace fired {

double average_path_length(Index n) {
  constexpr double euler_gamma = 0.5772156649015329;
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n);
  return 2.0 * (std::log(m - 1.0) + euler_gamma) - 2.0 * (m - 1.0) / m;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& data, Index height_limit, Rng& rng)
      : data_(data), height_limit_(height_limit), rng_(rng) {}

  IsolationTree build(std::vector<Index> rows) {
    IsolationTree tree;
    tree.nodes.reserve(2 * rows.size());
    grow(tree, rows, 0, rows.size(), 0);
    return tree;
  }

 private:
  Index grow(IsolationTree& tree, std::vector<Index>& rows, std::size_t begin, std::size_t end,
             Index depth) {
    const auto node_id = static_cast<Index>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes.back().size = static_cast<Index>(end - begin);
    if (depth >= height_limit_ || end - begin <= 1) return node_id;

    // try features in random order until one is not constant on this node
    std::vector<Index> features(static_cast<std::size_t>(data_.cols()));
    std::iota(features.begin(), features.end(), Index{0});
    rng_.shuffle(features.begin(), features.end());
    for (Index f : features) {
      double lo = data_(rows[begin], f);
      double hi = lo;
      for (std::size_t r = begin + 1; r < end; ++r) {
        lo = std::min(lo, data_(rows[r], f));
        hi = std::max(hi, data_(rows[r], f));
      }
      if (!(hi > lo)) continue;
      double split = rng_.uniform(lo, hi);
      if (split <= lo) split = std::nextafter(lo, hi);
      const auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                      rows.begin() + static_cast<std::ptrdiff_t>(end),
                                      [&](Index r) { return data_(r, f) < split; });
      const auto cut = static_cast<std::size_t>(mid - rows.begin());
      const Index left = grow(tree, rows, begin, cut, depth + 1);
      const Index right = grow(tree, rows, cut, end, depth + 1);
      auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
      node.feature = f;
      node.split = split;
      node.left = left;
      node.right = right;
      return node_id;
    }
    return node_id;
  }

  const Eigen::MatrixXd& data_;
  Index height_limit_;
  Rng& rng_;
};

}  // namespace

IsolationForest iforest_fit(const Eigen::MatrixXd& data, Index n_trees, Index subsample,
                            std::uint64_t seed) {
  if (n_trees < 1) throw Error(ErrorCode::InvalidConfig, "n_trees must be >= 1");
  if (data.rows() < 2) throw Error(ErrorCode::TooFewSamples, "isolation forest needs 2 rows");
  Rng rng(seed);
  IsolationForest forest;
  forest.sample_size = std::min<Index>(subsample, data.rows());
  const auto height_limit =
      static_cast<Index>(std::ceil(std::log2(static_cast<double>(std::max<Index>(forest.sample_size, 2)))));
  TreeBuilder builder(data, height_limit, rng);
  std::vector<Index> all(static_cast<std::size_t>(data.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  for (Index t = 0; t < n_trees; ++t) {
    // partial Fisher-Yates: sample without replacement
    for (Index i = 0; i < forest.sample_size; ++i) {
      const auto j = i + static_cast<Index>(rng.index(static_cast<std::uint64_t>(data.rows() - i)));
      std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    std::vector<Index> sample(all.begin(), all.begin() + forest.sample_size);
    forest.trees.push_back(builder.build(std::move(sample)));
  }
  return forest;
}

double iforest_path_length(const IsolationTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  Index node = 0;
  Index depth = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& n = tree.nodes[static_cast<std::size_t>(node)];
    node = x(n.feature) < n.split ? n.left : n.right;
    ++depth;
  }
  return static_cast<double>(depth) + average_path_length(tree.nodes[static_cast<std::size_t>(node)].size);
}

Eigen::VectorXd iforest_score(const IsolationForest& forest, const Eigen::MatrixXd& data) {
  const double norm = average_path_length(forest.sample_size);
  Eigen::VectorXd scores(data.rows());
  for (Index r = 0; r < data.rows(); ++r) {
    double total = 0.0;
    for (const auto& tree : forest.trees) total += iforest_path_length(tree, data.row(r));
    const double mean = total / static_cast<double>(forest.trees.size());
    scores(r) = norm > 0.0 ? std::exp2(-mean / norm) : 1.0;
  }
  return scores;
}

}  // namespace fired
