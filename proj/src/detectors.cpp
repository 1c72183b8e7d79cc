#include "fired/detectors.hpp"

#include "fired/error.hpp"
#include "fired/random.hpp"
#include "fired/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fired {

std::string to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::IForest: return "iforest";
    case DetectorKind::Knn: return "knn";
    case DetectorKind::Lof: return "lof";
    case DetectorKind::Ocsvm: return "ocsvm";
  }
  return "iforest";
}

DetectorKind detector_kind_from_string(const std::string& s) {
  if (s == "iforest") return DetectorKind::IForest;
  if (s == "knn") return DetectorKind::Knn;
  if (s == "lof") return DetectorKind::Lof;
  if (s == "ocsvm") return DetectorKind::Ocsvm;
  throw Error(ErrorCode::InvalidConfig, "unknown detector '" + s + "'");
}

DetectorSpec DetectorSpec::defaults(DetectorKind kind, double anomaly_fraction, std::uint64_t seed) {
  DetectorSpec spec;
  spec.kind = kind;
  spec.anomaly_fraction = anomaly_fraction;
  spec.seed = seed;
  spec.k = kind == DetectorKind::Lof ? 20 : 5;
  return spec;
}

void DetectorSpec::validate(Index rows) const {
  if (!(anomaly_fraction > 0.0 && anomaly_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "anomaly_fraction must lie in (0,1)");
  }
  if (n_trees < 1) throw Error(ErrorCode::InvalidConfig, "n_trees must be >= 1");
  if (subsample < 2) throw Error(ErrorCode::InvalidConfig, "subsample must be >= 2");
  if (kind == DetectorKind::Knn || kind == DetectorKind::Lof) {
    if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
    if (rows <= k + 1) {
      throw Error(ErrorCode::TooFewSamples, name() + " with k=" + std::to_string(k) + " needs more than " +
                                                std::to_string(k + 1) + " rows");
    }
  }
  if (rows < 2) throw Error(ErrorCode::TooFewSamples, name() + " needs at least 2 rows");
  if (gamma && !(*gamma > 0.0)) throw Error(ErrorCode::InvalidConfig, "gamma must be positive");
}

std::vector<DetectorSpec> default_detectors(double anomaly_fraction, std::uint64_t master_seed) {
  std::vector<DetectorSpec> specs;
  for (auto kind : {DetectorKind::IForest, DetectorKind::Knn, DetectorKind::Lof, DetectorKind::Ocsvm}) {
    specs.push_back(DetectorSpec::defaults(kind, anomaly_fraction, derive_seed(master_seed, to_string(kind))));
  }
  return specs;
}

ScoreVector fit_score(const DetectorSpec& spec, const Eigen::MatrixXd& data) {
  spec.validate(data.rows());
  if (!data.allFinite()) throw Error(ErrorCode::NonFiniteValue, "detector input");
  ScoreVector out;
  out.learner = spec.name();
  switch (spec.kind) {
    case DetectorKind::IForest: {
      const auto forest = iforest_fit(data, spec.n_trees, spec.subsample, spec.seed);
      out.values = iforest_score(forest, data);
      break;
    }
    case DetectorKind::Knn:
      out.values = knn_score(data, spec.k, spec.distance, spec.knn_aggregate);
      break;
    case DetectorKind::Lof:
      out.values = lof_score(data, spec.k, spec.distance);
      break;
    case DetectorKind::Ocsvm: {
      const double gamma = spec.gamma.value_or(ocsvm_default_gamma(data));
      const auto model = ocsvm_fit(data, spec.anomaly_fraction, gamma, spec.tolerance,
                                   spec.max_iterations, spec.cache_mb);
      out.values = -model.train_decision;
      break;
    }
  }
  return out;
}

ScoreVector fit_score(const DetectorSpec& spec, const SelectedFrame& data) {
  return fit_score(spec, data.values);
}

std::vector<std::uint8_t> threshold(const Eigen::VectorXd& scores, double anomaly_fraction) {
  if (!(anomaly_fraction > 0.0 && anomaly_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "anomaly_fraction must lie in (0,1)");
  }
  const auto d = static_cast<std::size_t>(scores.size());
  // the epsilon absorbs representation error such as 0.3 * 10 = 3.0000000000000004
  const auto flagged = std::min(
      d, static_cast<std::size_t>(std::ceil(anomaly_fraction * static_cast<double>(d) - 1e-9)));
  std::vector<Index> order(d);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });
  std::vector<std::uint8_t> verdicts(d, 0);
  for (std::size_t i = 0; i < flagged; ++i) verdicts[static_cast<std::size_t>(order[i])] = 1;
  return verdicts;
}

std::string to_csv(const ScoreVector& scores, const std::vector<Timestamp>& timestamps) {
  if (static_cast<Index>(timestamps.size()) != scores.values.size()) {
    throw Error(ErrorCode::LengthMismatch, "scores vs timestamps");
  }
  std::string out = "timestamp,score\n";
  for (Index r = 0; r < scores.values.size(); ++r) {
    out += std::to_string(timestamps[static_cast<std::size_t>(r)]) + "," + format_double(scores.values(r)) + "\n";
  }
  return out;
}

ScoreVector parse_score_csv(const std::string& text, const std::string& learner) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line.rfind("timestamp,score", 0) != 0) throw Error(ErrorCode::ParseError, "score CSV header");
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::ParseError, "score CSV line " + std::to_string(line_no));
    double v = 0.0;
    const char* first = line.data() + comma + 1;
    const char* last = line.data() + line.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
      throw Error(ErrorCode::ParseError, "score CSV line " + std::to_string(line_no));
    }
    values.push_back(v);
  }
  ScoreVector out;
  out.learner = learner;
  out.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
  return out;
}

}  // namespace fired
