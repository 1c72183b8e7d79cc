#include "fired/pipeline.hpp"

#include "fired/ensemble.hpp"
#include "fired/error.hpp"
#include "fired/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

namespace fired {

std::string to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::Max: return "max";
    case EnsembleKind::Avg: return "avg";
    case EnsembleKind::Weighted: return "weighted";
    case EnsembleKind::Deep: return "deep";
  }
  return "deep";
}

EnsembleKind ensemble_kind_from_string(const std::string& s) {
  if (s == "max") return EnsembleKind::Max;
  if (s == "avg") return EnsembleKind::Avg;
  if (s == "weighted") return EnsembleKind::Weighted;
  if (s == "deep") return EnsembleKind::Deep;
  throw Error(ErrorCode::InvalidConfig, "unknown ensemble '" + s + "'");
}

namespace {

std::string hex64(std::uint64_t x) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, x >>= 4) out[static_cast<std::size_t>(i)] = digits[x & 0xf];
  return out;
}

template <typename T>
Json optional_to_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
void optional_from_json(const Json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key)) {
    if (j.at(key).is_null()) {
      out.reset();
    } else {
      out = j.at(key).get<T>();
    }
  }
}

class StageTimer {
 public:
  StageTimer(std::map<std::string, double>& timings, std::string name)
      : timings_(timings), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    timings_[name_] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::map<std::string, double>& timings_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

template <typename F>
auto in_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), "stage '" + stage + "': " + e.what());
  }
}

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  const int sources = (data.metrics ? 1 : 0) + (data.smd_values ? 1 : 0) + (data.generator ? 1 : 0);
  if (sources != 1) fail("exactly one of data.metrics, data.smd_values, data.generator must be set");
  if (data.smd_values && !data.smd_labels) fail("data.smd_labels is required with data.smd_values");
  for (const auto* path : {&data.metrics, &data.labels, &data.smd_values, &data.smd_labels}) {
    if (*path && !std::filesystem::exists(**path)) fail("file not found: " + **path);
  }
  if (data.generator) data.generator->validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train_fraction must lie in (0,1)");
  if (shift < 0) fail("shift must be >= 0");
  if (holdout && !(*holdout > 0.0 && *holdout <= 1.0 - train_fraction + 1e-12)) {
    fail("holdout must lie in (0, 1 - train_fraction]");
  }
  if (mi_bins < 2) fail("mi_bins must be >= 2");
  if (detectors.anomaly_fraction && !(*detectors.anomaly_fraction > 0.0 && *detectors.anomaly_fraction < 1.0)) {
    fail("anomaly_fraction must lie in (0,1)");
  }
  if (detectors.n_trees < 1 || detectors.subsample < 2 || detectors.knn_k < 1 || detectors.lof_k < 1) {
    fail("detector sizes must be positive");
  }
  if (!(correlation.r_min >= 0.0 && correlation.r_min <= 1.0) || !(correlation.p_max > 0.0 && correlation.p_max <= 1.0)) {
    fail("correlation thresholds out of range");
  }
  if (!(pca.variance > 0.0 && pca.variance <= 1.0)) fail("pca variance must lie in (0,1]");
  if (!(rca.alpha > 0.0 && rca.alpha < 1.0)) fail("rca alpha must lie in (0,1)");
  if (rca.walks < 1 || rca.length < 0 || rca.k < 1 || rca.merge_gap < 0) fail("rca walks, k and merge_gap out of range");
  train.validate();
}

void to_json(Json& j, const PipelineConfig& c) {
  Json data = Json::object();
  if (c.data.metrics) data["metrics"] = *c.data.metrics;
  if (c.data.labels) data["labels"] = *c.data.labels;
  if (c.data.smd_values) data["smd_values"] = *c.data.smd_values;
  if (c.data.smd_labels) data["smd_labels"] = *c.data.smd_labels;
  if (c.data.generator) data["generator"] = *c.data.generator;
  j = Json{
      {"data", std::move(data)},
      {"selection",
       {{"method", to_string(c.selection)},
        {"r_min", c.correlation.r_min},
        {"p_max", c.correlation.p_max},
        {"variance", c.pca.variance},
        {"components", optional_to_json(c.pca.n_fixed)}}},
      {"detectors",
       {{"anomaly_fraction", optional_to_json(c.detectors.anomaly_fraction)},
        {"n_trees", c.detectors.n_trees},
        {"subsample", c.detectors.subsample},
        {"knn_k", c.detectors.knn_k},
        {"lof_k", c.detectors.lof_k},
        {"knn_aggregate", c.detectors.knn_aggregate == KnnAggregate::Kth ? "kth" : "mean"},
        {"distance", c.detectors.distance == Distance::Euclidean ? "euclidean" : "manhattan"},
        {"gamma", optional_to_json(c.detectors.gamma)},
        {"cache_mb", c.detectors.cache_mb}}},
      {"ensemble",
       {{"method", to_string(c.ensemble)},
        {"bins", c.mi_bins},
        {"train_fraction", c.train_fraction},
        {"holdout", optional_to_json(c.holdout)},
        {"shift", c.shift},
        {"train",
         {{"hidden", c.train.hidden},
          {"epochs", c.train.epochs},
          {"batch", c.train.batch},
          {"learning_rate", c.train.learning_rate},
          {"beta1", c.train.beta1},
          {"beta2", c.train.beta2},
          {"epsilon", c.train.epsilon},
          {"shuffle", c.train.shuffle}}}}},
      {"rca",
       {{"enabled", c.rca.enabled},
        {"alpha", c.rca.alpha},
        {"vstructures", to_string(c.rca.vstructures)},
        {"walks", c.rca.walks},
        {"length", c.rca.length},
        {"undirected", to_string(c.rca.undirected)},
        {"self_avoiding", c.rca.self_avoiding},
        {"indicator_sink", c.rca.indicator_sink},
        {"k", c.rca.k},
        {"merge_gap", c.rca.merge_gap}}},
      {"seed", c.seed},
      {"out", c.out},
      {"record_timings", c.record_timings}};
}

void from_json(const Json& j, PipelineConfig& c) {
  try {
    if (j.contains("data")) {
      const auto& d = j.at("data");
      optional_from_json(d, "metrics", c.data.metrics);
      optional_from_json(d, "labels", c.data.labels);
      optional_from_json(d, "smd_values", c.data.smd_values);
      optional_from_json(d, "smd_labels", c.data.smd_labels);
      optional_from_json(d, "generator", c.data.generator);
    }
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      if (s.contains("method")) c.selection = selection_method_from_string(s.at("method").get<std::string>());
      c.correlation.r_min = s.value("r_min", c.correlation.r_min);
      c.correlation.p_max = s.value("p_max", c.correlation.p_max);
      c.pca.variance = s.value("variance", c.pca.variance);
      optional_from_json(s, "components", c.pca.n_fixed);
    }
    if (j.contains("detectors")) {
      const auto& s = j.at("detectors");
      optional_from_json(s, "anomaly_fraction", c.detectors.anomaly_fraction);
      c.detectors.n_trees = s.value("n_trees", c.detectors.n_trees);
      c.detectors.subsample = s.value("subsample", c.detectors.subsample);
      c.detectors.knn_k = s.value("knn_k", c.detectors.knn_k);
      c.detectors.lof_k = s.value("lof_k", c.detectors.lof_k);
      if (s.contains("knn_aggregate")) {
        const auto v = s.at("knn_aggregate").get<std::string>();
        if (v != "kth" && v != "mean") throw Error(ErrorCode::InvalidConfig, "knn_aggregate must be kth or mean");
        c.detectors.knn_aggregate = v == "kth" ? KnnAggregate::Kth : KnnAggregate::Mean;
      }
      if (s.contains("distance")) {
        const auto v = s.at("distance").get<std::string>();
        if (v != "euclidean" && v != "manhattan") {
          throw Error(ErrorCode::InvalidConfig, "distance must be euclidean or manhattan");
        }
        c.detectors.distance = v == "euclidean" ? Distance::Euclidean : Distance::Manhattan;
      }
      optional_from_json(s, "gamma", c.detectors.gamma);
      c.detectors.cache_mb = s.value("cache_mb", c.detectors.cache_mb);
    }
    if (j.contains("ensemble")) {
      const auto& s = j.at("ensemble");
      if (s.contains("method")) c.ensemble = ensemble_kind_from_string(s.at("method").get<std::string>());
      c.mi_bins = s.value("bins", c.mi_bins);
      c.train_fraction = s.value("train_fraction", c.train_fraction);
      optional_from_json(s, "holdout", c.holdout);
      c.shift = s.value("shift", c.shift);
      if (s.contains("train")) {
        const auto& t = s.at("train");
        c.train.hidden = t.value("hidden", c.train.hidden);
        c.train.epochs = t.value("epochs", c.train.epochs);
        c.train.batch = t.value("batch", c.train.batch);
        c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
        c.train.beta1 = t.value("beta1", c.train.beta1);
        c.train.beta2 = t.value("beta2", c.train.beta2);
        c.train.epsilon = t.value("epsilon", c.train.epsilon);
        c.train.shuffle = t.value("shuffle", c.train.shuffle);
      }
    }
    if (j.contains("rca")) {
      const auto& s = j.at("rca");
      c.rca.enabled = s.value("enabled", c.rca.enabled);
      c.rca.alpha = s.value("alpha", c.rca.alpha);
      if (s.contains("vstructures")) c.rca.vstructures = vstructure_rule_from_string(s.at("vstructures").get<std::string>());
      c.rca.walks = s.value("walks", c.rca.walks);
      c.rca.length = s.value("length", c.rca.length);
      if (s.contains("undirected")) c.rca.undirected = undirected_policy_from_string(s.at("undirected").get<std::string>());
      c.rca.self_avoiding = s.value("self_avoiding", c.rca.self_avoiding);
      c.rca.indicator_sink = s.value("indicator_sink", c.rca.indicator_sink);
      c.rca.k = s.value("k", c.rca.k);
      c.rca.merge_gap = s.value("merge_gap", c.rca.merge_gap);
    }
    c.seed = j.value("seed", c.seed);
    c.out = j.value("out", c.out);
    c.record_timings = j.value("record_timings", c.record_timings);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
}

PipelineConfig load_config(const std::string& path) {
  PipelineConfig c;
  from_json(read_json(path), c);
  return c;
}

std::uint64_t config_hash(const PipelineConfig& c) {
  Json j = c;
  j.erase("out");
  j.erase("record_timings");
  return fnv1a(j.dump());
}

LoadedData load_data(const DataSource& source, std::uint64_t seed) {
  LoadedData out;
  if (source.generator) {
    auto g = generate(*source.generator, derive_seed(seed, "generate"));
    out.frame = std::move(g.frame);
    out.labels = std::move(g.labels);
    out.truth = std::move(g.truth);
  } else if (source.smd_values) {
    auto [frame, labels] = load_smd(*source.smd_values, source.smd_labels.value_or(""));
    out.frame = std::move(frame);
    out.labels = std::move(labels);
  } else if (source.metrics) {
    auto [frame, labels] = load_csv(*source.metrics, source.labels);
    out.frame = std::move(frame);
    out.labels = std::move(labels);
  } else {
    throw Error(ErrorCode::InvalidConfig, "no data source");
  }
  if (out.labels && !(out.labels->timestamps() == out.frame.timestamps())) {
    auto [frame, labels] = align(out.frame, *out.labels);
    out.frame = std::move(frame);
    out.labels = std::move(labels);
  }
  return out;
}

SelectionOutcome select_stage(const PipelineConfig& config, const MetricFrame& frame,
                              const std::optional<LabelSeries>& labels, Index train_rows) {
  SelectionOutcome out;
  switch (config.selection) {
    case SelectionMethod::None:
      out.frame = select_all(frame);
      break;
    case SelectionMethod::Pca: {
      out.pca = pca_fit(frame, config.pca);
      out.frame = pca_transform(*out.pca, frame);
      break;
    }
    case SelectionMethod::Correlation: {
      if (!labels) {
        out.warnings.push_back("correlation selection needs labels; all metrics kept");
        out.frame = select_all(frame);
        break;
      }
      const Index rows = std::max<Index>(3, std::min(train_rows, frame.rows()));
      const MetricFrame prefix = frame.slice(0, rows);
      const LabelSeries prefix_labels = labels->slice(0, rows);
      out.correlation = correlate(prefix, prefix_labels, config.correlation);
      std::vector<std::string> keep;
      for (std::size_t c = 0; c < out.correlation->names.size(); ++c) {
        if (out.correlation->retained[c]) keep.push_back(out.correlation->names[c]);
      }
      if (keep.empty()) {
        out.warnings.push_back("AllFiltered: no metric passed the correlation filter; all metrics kept");
        out.frame = select_all(frame);
      } else {
        out.frame = select_columns(frame, keep);
      }
      break;
    }
  }
  return out;
}

std::vector<DetectorSpec> detector_specs(const DetectorSettings& settings, double anomaly_fraction,
                                         std::uint64_t master_seed) {
  auto specs = default_detectors(anomaly_fraction, master_seed);
  for (auto& s : specs) {
    s.n_trees = settings.n_trees;
    s.subsample = settings.subsample;
    s.distance = settings.distance;
    s.gamma = settings.gamma;
    s.cache_mb = settings.cache_mb;
    if (s.kind == DetectorKind::Knn) {
      s.k = settings.knn_k;
      s.knn_aggregate = settings.knn_aggregate;
    }
    if (s.kind == DetectorKind::Lof) s.k = settings.lof_k;
  }
  return specs;
}

std::optional<std::pair<Index, Index>> longest_run(const std::vector<std::uint8_t>& flags, Index max_gap) {
  std::optional<std::pair<Index, Index>> best;
  std::optional<std::pair<Index, Index>> current;
  auto close = [&] {
    if (current && (!best || current->second - current->first > best->second - best->first)) best = current;
  };
  for (Index i = 0; i < static_cast<Index>(flags.size()); ++i) {
    if (!flags[static_cast<std::size_t>(i)]) continue;
    if (current && i - current->second - 1 <= max_gap) {
      current->second = i;
    } else {
      close();
      current = std::pair{i, i};
    }
  }
  close();
  return best;
}

RcaOutcome rca_stage(const RcaSettings& settings, const Eigen::MatrixXd& values,
                     const std::vector<std::string>& names, const std::vector<std::uint8_t>& indicator,
                     Index begin, Index end, std::uint64_t seed,
                     const std::optional<std::vector<std::string>>& truth) {
  RcaOutcome out;
  out.begin = begin;
  out.end = end;
  const Index rows = end - begin + 1;
  std::vector<std::string> kept;
  std::vector<Index> columns;
  for (Index c = 0; c < values.cols(); ++c) {
    const auto col = values.col(c).segment(begin, rows);
    if (col.maxCoeff() - col.minCoeff() > 0.0) {
      kept.push_back(names[static_cast<std::size_t>(c)]);
      columns.push_back(c);
    } else {
      out.pc.warnings.push_back("metric '" + names[static_cast<std::size_t>(c)] + "' constant in RCA span; dropped");
    }
  }
  Eigen::MatrixXd data(rows, static_cast<Index>(columns.size()) + 1);
  for (std::size_t c = 0; c < columns.size(); ++c) data.col(static_cast<Index>(c)) = values.col(columns[c]).segment(begin, rows);
  for (Index r = 0; r < rows; ++r) data(r, data.cols() - 1) = indicator[static_cast<std::size_t>(begin + r)];
  kept.emplace_back(kIndicator);
  // z-score each column over the span
  for (Index c = 0; c < data.cols(); ++c) {
    const double mean = data.col(c).mean();
    const double sd = std::sqrt((data.col(c).array() - mean).square().mean());
    data.col(c) = (data.col(c).array() - mean) / sd;
  }

  PcOptions pc_options;
  pc_options.alpha = settings.alpha;
  pc_options.vstructures = settings.vstructures;
  if (settings.indicator_sink) pc_options.sink = kIndicator;
  auto warnings = std::move(out.pc.warnings);
  out.pc = pc_build(data, kept, pc_options);
  out.pc.warnings.insert(out.pc.warnings.begin(), warnings.begin(), warnings.end());

  WalkOptions walk;
  walk.walks = settings.walks;
  walk.length = settings.length;
  walk.undirected = settings.undirected;
  walk.self_avoiding = settings.self_avoiding;
  walk.seed = derive_seed(seed, "walk");
  out.ranking = localize(out.pc.graph, walk);

  if (truth && !truth->empty()) {
    const std::set<std::string> vrc(truth->begin(), truth->end());
    for (Index k = 1; k <= settings.k; ++k) out.ac.push_back(ac_at_k(out.ranking.causes, vrc, k));
    out.avg = avg_at_k(out.ranking.causes, vrc, settings.k);
  }
  return out;
}

Evaluation evaluate_shifted(const std::vector<std::uint8_t>& verdicts, const std::vector<std::uint8_t>& labels,
                            Index begin, Index shift) {
  if (verdicts.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "verdicts vs labels");
  const auto d = static_cast<Index>(labels.size());
  std::vector<std::uint8_t> v;
  std::vector<std::uint8_t> l;
  for (Index t = begin; t + shift < d; ++t) {
    v.push_back(verdicts[static_cast<std::size_t>(t)]);
    l.push_back(labels[static_cast<std::size_t>(t + shift)]);
  }
  return prf1(v, l);
}

std::optional<double> PipelineResult::f1(const std::string& method) const {
  for (const auto& r : results) {
    if (r.method == method) return r.f1;
  }
  return std::nullopt;
}

namespace {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::string root) : root_(std::move(root)) {
    if (!root_.empty()) std::filesystem::create_directories(root_);
  }

  std::string emit(const std::string& name, const std::string& contents) {
    checksums_[name] = hex64(fnv1a(contents));
    if (!root_.empty()) {
      const auto path = std::filesystem::path(root_) / name;
      std::filesystem::create_directories(path.parent_path());
      write_file(path.string(), contents);
    }
    return name;
  }

  const std::map<std::string, std::string>& checksums() const { return checksums_; }

 private:
  std::string root_;
  std::map<std::string, std::string> checksums_;
};

std::string verdicts_to_csv(const DiagnosisReport& r) {
  std::ostringstream out;
  out << "timestamp,verdict,probability\n";
  for (std::size_t i = 0; i < r.verdicts.size(); ++i) {
    out << r.timestamps[i] << ',' << int(r.verdicts[i]) << ',' << format_double(r.probabilities[i]) << '\n';
  }
  return out.str();
}

Json selection_json(const SelectionOutcome& s) {
  Json j{{"method", to_string(s.frame.method)}, {"n", s.frame.cols()}, {"names", s.frame.names}};
  if (s.pca) j["retained_variance"] = s.pca->retained_variance;
  return j;
}

Json selection_artifact(const SelectedFrame& s) {
  Json j = s;
  j.erase("values");
  j.erase("timestamps");
  return j;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  PipelineResult result;
  ArtifactWriter writer(config.out);
  auto& timings = result.timings;

  // ingest
  LoadedData loaded = [&] {
    StageTimer timer(timings, "ingest");
    return in_stage("ingest", [&] { return load_data(config.data, config.seed); });
  }();
  if (loaded.truth) {
    writer.emit("data/metrics.csv", to_csv(loaded.frame));
    writer.emit("data/labels.csv", to_csv(*loaded.labels));
    writer.emit("data/truth.json", Json(*loaded.truth).dump(2) + "\n");
  }
  const Index d = loaded.frame.rows();
  result.boundary = split_boundary(d, config.train_fraction);
  result.eval_begin = config.holdout ? std::max(result.boundary, d - static_cast<Index>(std::floor(*config.holdout * static_cast<double>(d) + 1e-9)))
                                     : result.boundary;
  const bool labelled = loaded.labels.has_value();

  // select
  SelectionOutcome selection = [&] {
    StageTimer timer(timings, "select");
    return in_stage("select", [&] { return select_stage(config, loaded.frame, loaded.labels, result.boundary); });
  }();
  result.warnings.insert(result.warnings.end(), selection.warnings.begin(), selection.warnings.end());
  writer.emit("selection.json", selection_artifact(selection.frame).dump(2) + "\n");
  if (selection.correlation) writer.emit("correlation.csv", to_csv(*selection.correlation));

  // detect
  if (config.detectors.anomaly_fraction) {
    result.anomaly_fraction = *config.detectors.anomaly_fraction;
  } else if (labelled) {
    const auto pos = loaded.labels->slice(0, result.boundary).positives();
    result.anomaly_fraction = pos > 0 ? static_cast<double>(pos) / static_cast<double>(result.boundary) : 0.1;
    result.anomaly_fraction = std::clamp(result.anomaly_fraction, 1.0 / static_cast<double>(d), 0.5);
  } else {
    result.anomaly_fraction = 0.1;
  }
  std::vector<ScoreVector> scores;
  std::map<std::string, double> method_seconds;
  {
    StageTimer timer(timings, "detect");
    in_stage("detect", [&] {
      for (const auto& spec : detector_specs(config.detectors, result.anomaly_fraction, derive_seed(config.seed, "detect"))) {
        const auto t0 = std::chrono::steady_clock::now();
        scores.push_back(fit_score(spec, selection.frame));
        method_seconds[spec.name()] = elapsed(t0);
        writer.emit("scores/" + spec.name() + ".csv", to_csv(scores.back(), selection.frame.timestamps));
      }
      return 0;
    });
  }

  // ensemble
  DiagnosisReport& report = result.report;
  report.timestamps = selection.frame.timestamps;
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> candidates;
  {
    StageTimer timer(timings, "ensemble");
    in_stage("ensemble", [&] {
      Assembled assembled = assemble(scores);
      result.warnings.insert(result.warnings.end(), assembled.warnings.begin(), assembled.warnings.end());
      const ScoreMatrix& m = assembled.matrix;
      for (const auto& name : m.learners) {
        const auto it = std::find_if(scores.begin(), scores.end(), [&](const ScoreVector& s) { return s.learner == name; });
        candidates.emplace_back(name, threshold(it->values, result.anomaly_fraction));
      }
      auto linear = [&](const std::string& name, const Eigen::VectorXd& v) {
        const auto t0 = std::chrono::steady_clock::now();
        RankedVerdicts rv = rank_verdicts(v, result.anomaly_fraction);
        method_seconds[name] = elapsed(t0);
        candidates.emplace_back(name, rv.verdicts);
        return rv;
      };
      const auto t0 = std::chrono::steady_clock::now();
      const EnsembleWeights w = mi_weights(m.values, config.mi_bins);
      const double weight_seconds = elapsed(t0);
      result.warnings.insert(result.warnings.end(), w.warnings.begin(), w.warnings.end());
      RankedVerdicts rmax = linear("max", ensemble_max(m).values);
      RankedVerdicts ravg = linear("avg", ensemble_avg(m).values);
      RankedVerdicts rw = linear("weighted", ensemble_weighted(m, w).values);
      method_seconds["weighted"] += weight_seconds;
      auto use = [&](const RankedVerdicts& rv) {
        report.verdicts = rv.verdicts;
        report.probabilities = rv.probabilities;
        report.threshold = rv.threshold;
      };
      switch (config.ensemble) {
        case EnsembleKind::Max: use(rmax); break;
        case EnsembleKind::Avg: use(ravg); break;
        case EnsembleKind::Weighted: use(rw); break;
        case EnsembleKind::Deep: {
          if (!labelled) throw Error(ErrorCode::InvalidConfig, "the deep ensemble needs labels");
          const auto t1 = std::chrono::steady_clock::now();
          const Split parts = split(m, *loaded.labels, config.train_fraction);
          result.warnings.insert(result.warnings.end(), parts.warnings.begin(), parts.warnings.end());
          result.model = train_deep(parts.train, parts.train_labels, config.train, derive_seed(config.seed, "deep"),
                                    config.shift);
          const DeepPrediction p = predict_deep(*result.model, m);
          method_seconds["deep"] = elapsed(t1);
          report.verdicts = p.verdicts;
          report.probabilities = p.probabilities;
          report.threshold = result.model->threshold;
          candidates.emplace_back("deep", p.verdicts);
          writer.emit("model.json", model_to_json(*result.model).dump(2) + "\n");
          break;
        }
      }
      return 0;
    });
  }
  const std::string chosen = to_string(config.ensemble);
  const std::string verdicts_path = writer.emit("verdicts.csv", verdicts_to_csv(report));

  // eval
  if (labelled) {
    StageTimer timer(timings, "eval");
    for (const auto& [name, verdicts] : candidates) {
      const Index s = name == "deep" ? config.shift : 0;
      const Evaluation e = evaluate_shifted(verdicts, loaded.labels->labels(), result.eval_begin, s);
      result.results.push_back({name, "run", e.precision, e.recall, e.f1,
                                config.record_timings ? method_seconds[name] : 0.0});
      if (name == chosen) {
        report.evaluation = e;
        report.evaluation->seconds = method_seconds[name];
      }
    }
    writer.emit("results.csv", results_to_csv(result.results));
  }

  // rca
  Json rca_json = nullptr;
  {
    StageTimer timer(timings, "rca");
    std::string skipped;
    // A verdict at row t is a statement about row t + shift.
    std::vector<std::uint8_t> detected(static_cast<std::size_t>(d), 0);
    const Index s = config.ensemble == EnsembleKind::Deep ? config.shift : 0;
    for (Index t = 0; t + s < d; ++t) detected[static_cast<std::size_t>(t + s)] = report.verdicts[static_cast<std::size_t>(t)];
    const auto run = longest_run(detected, config.rca.merge_gap);
    if (!config.rca.enabled) {
      skipped = "disabled";
    } else if (selection.frame.method == SelectionMethod::Pca) {
      skipped = "PCA components have no metric identity";
    } else if (!run) {
      skipped = "no anomaly window detected";
    } else {
      const Index len = run->second - run->first + 1;
      const Index begin = std::max<Index>(0, run->first - len);
      const Index end = run->second;
      const std::vector<std::uint8_t>& indicator = labelled ? loaded.labels->labels() : detected;
      const auto first = indicator.begin() + begin;
      const auto last = indicator.begin() + end + 1;
      const bool constant = std::all_of(first, last, [&](std::uint8_t v) { return v == *first; });
      if (end - begin + 1 < static_cast<Index>(selection.frame.cols()) + 8) {
        skipped = "anomaly window too short for causal discovery";
      } else if (constant) {
        skipped = "indicator constant over the RCA span";
      } else {
        std::optional<std::vector<std::string>> truth;
        if (loaded.truth) truth = loaded.truth->root_causes;
        result.rca = in_stage("rca", [&] {
          return rca_stage(config.rca, selection.frame.values, selection.frame.names, indicator, begin, end,
                           config.seed, truth);
        });
        report.root_causes = result.rca->ranking.causes;
        result.warnings.insert(result.warnings.end(), result.rca->pc.warnings.begin(), result.rca->pc.warnings.end());
        result.warnings.insert(result.warnings.end(), result.rca->ranking.warnings.begin(),
                               result.rca->ranking.warnings.end());
        const auto graph_path = writer.emit("graph.txt", to_edge_list(result.rca->pc.graph));
        writer.emit("graph.json", Json(result.rca->pc.graph).dump(2) + "\n");
        const auto ranking_path = writer.emit("ranking.csv", ranking_to_csv(result.rca->ranking.causes));
        rca_json = Json{{"graph_path", graph_path},
                        {"ranking_path", ranking_path},
                        {"span", {report.timestamps[static_cast<std::size_t>(begin)],
                                  report.timestamps[static_cast<std::size_t>(end)]}},
                        {"walks", result.rca->ranking.walks},
                        {"ranking", result.rca->ranking.causes},
                        {"ac_at_k", result.rca->ac},
                        {"avg", optional_to_json(result.rca->avg)}};
      }
    }
    if (!skipped.empty()) rca_json = Json{{"skipped", skipped}};
  }
  report.validate();

  // report
  Json detection{{"method", chosen},
                 {"verdicts_path", verdicts_path},
                 {"threshold", report.threshold},
                 {"anomaly_fraction", result.anomaly_fraction},
                 {"train_rows", result.boundary},
                 {"evaluated_from_row", result.eval_begin},
                 {"shift", config.shift},
                 {"base_learners_fit_on", "full series"}};
  if (report.evaluation) {
    detection["precision"] = report.evaluation->precision;
    detection["recall"] = report.evaluation->recall;
    detection["f1"] = report.evaluation->f1;
    if (config.record_timings) detection["seconds"] = report.evaluation->seconds;
    Json methods = Json::array();
    for (const auto& r : result.results) {
      methods.push_back({{"method", r.method}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}});
    }
    detection["methods"] = std::move(methods);
  }
  Json manifest{{"config_hash", hex64(config_hash(config))},
                {"seed", config.seed},
                {"stages", {"ingest", "select", "detect", "ensemble", "eval", "rca"}},
                {"artifacts", writer.checksums()}};
  if (config.record_timings) manifest["timings"] = timings;
  result.report_json = Json{{"manifest", manifest},
                            {"selection", selection_json(selection)},
                            {"detection", std::move(detection)},
                            {"rca", std::move(rca_json)},
                            {"warnings", result.warnings}};
  writer.emit("report.json", result.report_json.dump(2) + "\n");
  Json full_manifest = manifest;
  full_manifest["timings"] = timings;
  full_manifest["artifacts"] = writer.checksums();
  writer.emit("manifest.json", full_manifest.dump(2) + "\n");
  return result;
}

}  // namespace fired
