#pragma once

#include "fired/core.hpp"
#include "fired/detectors.hpp"
#include "fired/eval.hpp"
#include "fired/ingest.hpp"
#include "fired/mlp.hpp"
#include "fired/preprocess.hpp"
#include "fired/rca.hpp"
#include "fired/serialize.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fired {

enum class EnsembleKind { Max, Avg, Weighted, Deep };
std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& s);

struct DataSource {
  std::optional<std::string> metrics;
  std::optional<std::string> labels;
  std::optional<std::string> smd_values;
  std::optional<std::string> smd_labels;
  std::optional<GenConfig> generator;
};

struct DetectorSettings {
  /// Unset: the positive rate of the training labels, or 0.1 without labels.
  std::optional<double> anomaly_fraction;
  Index n_trees = 100;
  Index subsample = 256;
  Index knn_k = 5;
  Index lof_k = 20;
  KnnAggregate knn_aggregate = KnnAggregate::Kth;
  Distance distance = Distance::Euclidean;
  std::optional<double> gamma;
  double cache_mb = 256.0;
};

struct RcaSettings {
  bool enabled = true;
  double alpha = 0.05;
  VStructureRule vstructures = VStructureRule::Majority;
  Index walks = 500;
  Index length = 0;
  UndirectedPolicy undirected = UndirectedPolicy::Ignore;
  bool self_avoiding = true;
  bool indicator_sink = true;
  Index k = 4;
  /// Verdict gaps of at most this many rows are bridged when locating the
  /// anomaly window.
  Index merge_gap = 5;
};

struct PipelineConfig {
  DataSource data;
  SelectionMethod selection = SelectionMethod::Correlation;
  CorrelationOptions correlation;
  PcaOptions pca;
  DetectorSettings detectors;
  EnsembleKind ensemble = EnsembleKind::Deep;
  Index mi_bins = 10;
  double train_fraction = 0.5;
  /// When set, evaluation uses only this trailing fraction of the rows
  /// instead of every row after the training prefix.
  std::optional<double> holdout;
  Index shift = 0;
  TrainConfig train;
  RcaSettings rca;
  std::uint64_t seed = 0;
  /// Empty: nothing is written to disk.
  std::string out;
  bool record_timings = false;

  void validate() const;
};

void to_json(Json& j, const PipelineConfig& c);
/// Missing keys keep their defaults.
void from_json(const Json& j, PipelineConfig& c);
PipelineConfig load_config(const std::string& path);
/// Hash of the canonical JSON form.
std::uint64_t config_hash(const PipelineConfig& c);

struct LoadedData {
  MetricFrame frame;
  std::optional<LabelSeries> labels;
  std::optional<GroundTruth> truth;
};
LoadedData load_data(const DataSource& source, std::uint64_t seed);

struct SelectionOutcome {
  SelectedFrame frame;
  std::optional<CorrelationResult> correlation;
  std::optional<PcaModel> pca;
  std::vector<std::string> warnings;
};
/// Correlation selection is fitted on the first `train_rows` rows only.
SelectionOutcome select_stage(const PipelineConfig& config, const MetricFrame& frame,
                              const std::optional<LabelSeries>& labels, Index train_rows);

std::vector<DetectorSpec> detector_specs(const DetectorSettings& settings, double anomaly_fraction,
                                         std::uint64_t master_seed);

/// Longest run of ones (earliest on ties), as inclusive row indices. Gaps of
/// up to `max_gap` zeros inside a run are bridged.
std::optional<std::pair<Index, Index>> longest_run(const std::vector<std::uint8_t>& flags, Index max_gap = 0);

struct RcaOutcome {
  Index begin = 0;  // rows [begin, end] fed to PC
  Index end = 0;
  PcResult pc;
  RootCauseRanking ranking;
  std::vector<double> ac;  // AC@1..k when ground truth is known
  std::optional<double> avg;
};
/// PC + walks on rows [begin, end] of `values` with `indicator` appended.
RcaOutcome rca_stage(const RcaSettings& settings, const Eigen::MatrixXd& values,
                     const std::vector<std::string>& names, const std::vector<std::uint8_t>& indicator,
                     Index begin, Index end, std::uint64_t seed,
                     const std::optional<std::vector<std::string>>& truth);

struct PipelineResult {
  DiagnosisReport report;
  Json report_json;
  std::vector<MethodResult> results;
  std::optional<RcaOutcome> rca;
  std::optional<MlpModel> model;
  Index boundary = 0;
  Index eval_begin = 0;
  double anomaly_fraction = 0.0;
  std::map<std::string, double> timings;
  std::vector<std::string> warnings;

  /// F1 of the named method on the evaluation rows, if evaluated.
  std::optional<double> f1(const std::string& method) const;
};

/// Runs every stage; writes artifacts when `config.out` is set.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Rows whose labels a shifted verdict is compared with: (verdict row t, label row t+s)
/// for t in [begin, d - s).
Evaluation evaluate_shifted(const std::vector<std::uint8_t>& verdicts, const std::vector<std::uint8_t>& labels,
                            Index begin, Index shift);

}  // namespace fired
