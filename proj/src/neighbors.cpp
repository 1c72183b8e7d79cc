#include "fired/detectors.hpp"
#include "fired/error.hpp"

#include <algorithm>
#include <numeric>

namespace fired {

Neighbors nearest_neighbors(const Eigen::MatrixXd& data, Index k, Distance metric) {
  const Index d = data.rows();
  if (k < 1 || k >= d) {
    throw Error(ErrorCode::TooFewSamples, "need more than k=" + std::to_string(k) + " rows, have " +
                                              std::to_string(d));
  }
  Neighbors nb;
  nb.index.resize(d, k);
  nb.distance.resize(d, k);
  Eigen::VectorXd dist(d);
  std::vector<Index> order(static_cast<std::size_t>(d - 1));
  for (Index i = 0; i < d; ++i) {
    if (metric == Distance::Euclidean) {
      dist = (data.rowwise() - data.row(i)).rowwise().squaredNorm().cwiseSqrt();
    } else {
      dist = (data.rowwise() - data.row(i)).cwiseAbs().rowwise().sum();
    }
    std::size_t p = 0;
    for (Index j = 0; j < d; ++j) {
      if (j != i) order[p++] = j;
    }
    auto closer = [&](Index a, Index b) { return dist(a) < dist(b) || (dist(a) == dist(b) && a < b); };
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), closer);
    std::sort(order.begin(), order.begin() + k, closer);
    for (Index m = 0; m < k; ++m) {
      nb.index(i, m) = order[static_cast<std::size_t>(m)];
      nb.distance(i, m) = dist(order[static_cast<std::size_t>(m)]);
    }
  }
  return nb;
}

Eigen::VectorXd knn_score(const Eigen::MatrixXd& data, Index k, Distance metric,
                          KnnAggregate aggregate) {
  const auto nb = nearest_neighbors(data, k, metric);
  if (aggregate == KnnAggregate::Mean) return nb.distance.rowwise().mean();
  return nb.distance.col(k - 1);
}

Eigen::VectorXd lof_score(const Eigen::MatrixXd& data, Index k, Distance metric) {
  const auto nb = nearest_neighbors(data, k, metric);
  const Index d = data.rows();
  const Eigen::VectorXd k_distance = nb.distance.col(k - 1);
  Eigen::VectorXd lrd(d);
  for (Index i = 0; i < d; ++i) {
    double reach = 0.0;
    for (Index m = 0; m < k; ++m) reach += std::max(k_distance(nb.index(i, m)), nb.distance(i, m));
    // a zero mean reach only happens inside duplicate clusters; cap the density there
    const double mean_reach = reach / static_cast<double>(k);
    lrd(i) = 1.0 / std::max(mean_reach, 1e-10);
  }
  Eigen::VectorXd lof(d);
  for (Index i = 0; i < d; ++i) {
    double sum = 0.0;
    for (Index m = 0; m < k; ++m) sum += lrd(nb.index(i, m));
    lof(i) = sum / static_cast<double>(k) / lrd(i);
  }
  return lof;
}

}  // namespace fired
