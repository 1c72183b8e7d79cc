#include "fired/ensemble.hpp"

#include "fired/detectors.hpp"
#include "fired/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fired {

namespace {

int learner_rank(const std::string& name) {
  static const std::vector<std::string> order{"iforest", "knn", "lof", "ocsvm"};
  const auto it = std::find(order.begin(), order.end(), name);
  return it == order.end() ? static_cast<int>(order.size()) : static_cast<int>(it - order.begin());
}

}  // namespace

Assembled assemble(const std::vector<ScoreVector>& scores) {
  if (scores.empty()) throw Error(ErrorCode::ShapeMismatch, "no score vectors");
  const Index d = scores.front().values.size();
  for (const auto& s : scores) {
    if (s.values.size() != d) throw Error(ErrorCode::LengthMismatch, "score vector '" + s.learner + "'");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return learner_rank(scores[a].learner) < learner_rank(scores[b].learner);
  });

  Assembled out;
  const auto k = static_cast<Index>(scores.size());
  out.matrix.values.resize(d, k);
  out.matrix.means.resize(k);
  out.matrix.stds.resize(k);
  for (Index c = 0; c < k; ++c) {
    const auto& s = scores[order[static_cast<std::size_t>(c)]];
    out.matrix.learners.push_back(s.learner);
    const double mean = s.values.mean();
    const double sd = std::sqrt((s.values.array() - mean).square().mean());
    out.matrix.means(c) = mean;
    out.matrix.stds(c) = sd;
    if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
      out.matrix.values.col(c) = (s.values.array() - mean) / sd;
    } else {
      out.matrix.values.col(c).setZero();
      out.matrix.stds(c) = 0.0;
      out.warnings.push_back("constant score column '" + s.learner + "' set to zero");
    }
  }
  return out;
}

ScoreMatrix normalize_with(const ScoreMatrix& reference, const std::vector<ScoreVector>& scores) {
  ScoreMatrix out;
  out.learners = reference.learners;
  out.means = reference.means;
  out.stds = reference.stds;
  const auto k = static_cast<Index>(reference.learners.size());
  Index d = -1;
  for (Index c = 0; c < k; ++c) {
    const auto& name = reference.learners[static_cast<std::size_t>(c)];
    const auto it = std::find_if(scores.begin(), scores.end(), [&](const ScoreVector& s) { return s.learner == name; });
    if (it == scores.end()) throw Error(ErrorCode::ShapeMismatch, "missing scores for '" + name + "'");
    if (d < 0) {
      d = it->values.size();
      out.values.resize(d, k);
    }
    if (it->values.size() != d) throw Error(ErrorCode::LengthMismatch, "score vector '" + name + "'");
    if (reference.stds(c) > 0.0) {
      out.values.col(c) = (it->values.array() - reference.means(c)) / reference.stds(c);
    } else {
      out.values.col(c).setZero();
    }
  }
  return out;
}

ScoreVector ensemble_max(const ScoreMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "empty score matrix");
  return {"ensemble_max", ensemble_max(m.values)};
}

ScoreVector ensemble_avg(const ScoreMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "empty score matrix");
  return {"ensemble_avg", ensemble_avg(m.values)};
}

ScoreVector ensemble_weighted(const ScoreMatrix& m, const EnsembleWeights& w) {
  if (w.w.size() != m.cols()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(w.w.size()) + " weights for " +
                                              std::to_string(m.cols()) + " columns");
  }
  return {"ensemble_weighted", ensemble_weighted(m.values, w.w)};
}

std::vector<Index> discretize(const Eigen::Ref<const Eigen::VectorXd>& column, Index bins) {
  const double lo = column.minCoeff();
  const double hi = column.maxCoeff();
  std::vector<Index> out(static_cast<std::size_t>(column.size()), 0);
  if (!(hi > lo)) return out;
  const double width = hi - lo;
  for (Index i = 0; i < column.size(); ++i) {
    const auto b = static_cast<Index>(std::floor((column(i) - lo) / width * static_cast<double>(bins)));
    out[static_cast<std::size_t>(i)] = std::clamp<Index>(b, 0, bins - 1);
  }
  return out;
}

double entropy(const std::vector<Index>& a, Index bins) {
  std::vector<double> count(static_cast<std::size_t>(bins), 0.0);
  for (Index v : a) count[static_cast<std::size_t>(v)] += 1.0;
  const auto n = static_cast<double>(a.size());
  double h = 0.0;
  for (double c : count) {
    if (c > 0.0) h -= c / n * std::log(c / n);
  }
  return h;
}

double mutual_information(const std::vector<Index>& a, const std::vector<Index>& b, Index bins) {
  const auto nb = static_cast<std::size_t>(bins);
  std::vector<double> joint(nb * nb, 0.0);
  std::vector<double> pa(nb, 0.0);
  std::vector<double> pb(nb, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = static_cast<std::size_t>(a[i]);
    const auto y = static_cast<std::size_t>(b[i]);
    joint[x * nb + y] += 1.0;
    pa[x] += 1.0;
    pb[y] += 1.0;
  }
  const auto n = static_cast<double>(a.size());
  double mi = 0.0;
  for (std::size_t x = 0; x < nb; ++x) {
    for (std::size_t y = 0; y < nb; ++y) {
      const double c = joint[x * nb + y];
      if (c > 0.0) mi += c / n * std::log(c * n / (pa[x] * pb[y]));
    }
  }
  return std::max(0.0, mi);
}

EnsembleWeights mi_weights(const Eigen::MatrixXd& m, Index bins) {
  if (bins < 2) throw Error(ErrorCode::InvalidConfig, "bins must be >= 2");
  if (m.rows() < bins) throw Error(ErrorCode::TooFewSamples, "fewer rows than bins");
  const Index k = m.cols();
  EnsembleWeights out;
  out.w = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  if (k == 1) return out;

  std::vector<std::vector<Index>> disc;
  std::vector<double> h;
  for (Index c = 0; c < k; ++c) {
    disc.push_back(discretize(m.col(c), bins));
    h.push_back(entropy(disc.back(), bins));
  }
  Eigen::VectorXd diversity(k);
  for (Index i = 0; i < k; ++i) {
    double total = 0.0;
    for (Index j = 0; j < k; ++j) {
      if (i == j) continue;
      const double denom = std::sqrt(h[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(j)]);
      const double nmi = denom > 0.0
                             ? std::min(1.0, mutual_information(disc[static_cast<std::size_t>(i)],
                                                                disc[static_cast<std::size_t>(j)], bins) /
                                                 denom)
                             : 0.0;
      total += nmi;
    }
    diversity(i) = std::max(0.0, 1.0 - total / static_cast<double>(k - 1));
  }
  const double sum = diversity.sum();
  if (sum > 1e-12) {
    out.w = diversity / sum;
  } else {
    out.warnings.push_back("all learners fully redundant; uniform weights");
  }
  return out;
}

Index split_boundary(Index rows, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "train_fraction must lie in (0,1)");
  }
  return std::min<Index>(rows, static_cast<Index>(std::ceil(train_fraction * static_cast<double>(rows) - 1e-9)));
}

ScoreMatrix slice_rows(const ScoreMatrix& m, Index begin, Index end) {
  ScoreMatrix out = m;
  out.values = m.values.middleRows(begin, end - begin);
  return out;
}

Split split(const ScoreMatrix& m, const LabelSeries& labels, double train_fraction) {
  if (m.rows() != labels.size()) throw Error(ErrorCode::LengthMismatch, "score matrix vs labels");
  Split out;
  out.boundary = split_boundary(m.rows(), train_fraction);
  out.train = slice_rows(m, 0, out.boundary);
  out.test = slice_rows(m, out.boundary, m.rows());
  out.train_labels = labels.slice(0, out.boundary);
  out.test_labels = labels.slice(out.boundary, labels.size());
  if (out.boundary == 0 || out.boundary == m.rows()) {
    out.warnings.push_back("DegenerateSplit: one side of the split is empty");
  } else {
    const auto pos = out.train_labels.positives();
    if (pos == 0 || pos == static_cast<std::size_t>(out.boundary)) {
      out.warnings.push_back("DegenerateSplit: training labels contain a single class");
    }
  }
  return out;
}

RankedVerdicts rank_verdicts(const Eigen::VectorXd& scores, double anomaly_fraction) {
  RankedVerdicts out;
  out.verdicts = threshold(scores, anomaly_fraction);
  const auto d = static_cast<std::size_t>(scores.size());
  std::vector<Index> order(d);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });
  out.probabilities.assign(d, 0.0);
  const auto dd = static_cast<double>(d);
  for (std::size_t pos = 0; pos < d; ++pos) {
    out.probabilities[static_cast<std::size_t>(order[pos])] = 1.0 - static_cast<double>(pos) / dd;
  }
  const auto flagged = static_cast<std::size_t>(std::count(out.verdicts.begin(), out.verdicts.end(), std::uint8_t{1}));
  out.threshold = flagged > 0 ? 1.0 - static_cast<double>(flagged - 1) / dd : 1.0 + 1e-9;
  return out;
}

}  // namespace fired
