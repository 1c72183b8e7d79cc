#pragma once

#include "fired/core.hpp"
#include "fired/serialize.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fired {

struct Window {
  Timestamp start = 0;  // inclusive
  Timestamp end = 0;    // inclusive

  friend bool operator==(const Window&, const Window&) = default;
};

/// Known structure behind generated data.
struct GroundTruth {
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> root_causes;
  std::vector<Window> windows;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

void to_json(Json& j, const GroundTruth& g);
void from_json(const Json& j, GroundTruth& g);

// --- CSV ingestion -------------------------------------------------------

/// `timestamp,<m1>,...,<mN>` with an optional `timestamp,label` file.
std::pair<MetricFrame, std::optional<LabelSeries>> load_csv(
    const std::string& path, const std::optional<std::string>& label_path = std::nullopt);

/// Parses the metric CSV layout from an in-memory buffer.
MetricFrame parse_metric_csv(const std::string& text, const std::string& origin = "<buffer>");
LabelSeries parse_label_csv(const std::string& text, const std::string& origin = "<buffer>");

/// SMD machine layout: headerless float rows (38 columns) and a one-label-
/// per-line file. Timestamps are 0,1,2,... with interval 1 and metric names
/// m0..m{N-1}.
std::pair<MetricFrame, LabelSeries> load_smd(const std::string& values_path,
                                             const std::string& labels_path);
std::pair<MetricFrame, LabelSeries> parse_smd(const std::string& values_text,
                                              const std::string& labels_text);

std::string to_csv(const MetricFrame& frame);
std::string to_csv(const LabelSeries& labels);

// --- synthetic generator --------------------------------------------------

enum class WindowLayout { Random, Periodic };

struct GenConfig {
  Index n_metrics = 20;
  Index n_samples = 1440;
  double edge_prob = 0.15;
  Index n_windows = 3;
  Index window_length = 80;
  WindowLayout layout = WindowLayout::Random;
  double magnitude = 6.0;
  double noise_sigma = 1.0;
  Index n_root_causes = 1;
  std::int64_t interval = 15;
  Timestamp start_time = 0;
  /// Fixed edge list over metric indices; replaces the random DAG when set.
  std::optional<std::vector<std::pair<Index, Index>>> edges;
  /// Fixed root-cause metric indices; otherwise drawn from DAG sources.
  std::optional<std::vector<Index>> root_causes;
  /// Fixed edge weights matching `edges`.
  std::optional<std::vector<double>> weights;

  void validate() const;
};

void to_json(Json& j, const GenConfig& c);
void from_json(const Json& j, GenConfig& c);

struct Generated {
  MetricFrame frame;
  LabelSeries labels;
  GroundTruth truth;
  /// Edge weights aligned with truth.edges.
  std::vector<double> weights;
};

/// Linear-Gaussian structural model on a random DAG with mean-shift faults
/// injected at the root-cause metrics during each anomaly window.
Generated generate(const GenConfig& config, std::uint64_t seed);

}  // namespace fired
