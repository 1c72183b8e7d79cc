#pragma once

#include "fired/core.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fired {

/// Precision, recall and F1 of binary verdicts; zero denominators give 0.
Evaluation prf1(const std::vector<std::uint8_t>& verdicts, const std::vector<std::uint8_t>& labels);
double f1_score(double precision, double recall);

struct MethodResult {
  std::string method;
  std::string dataset;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double seconds = 0.0;

  friend bool operator==(const MethodResult&, const MethodResult&) = default;
};

/// Fractional ranks (1 = best) from F1 descending; ties share the mean position.
std::map<std::string, double> rank_by_f1(const std::vector<MethodResult>& results);

/// method -> one rank per dataset (datasets in name order). Throws MissingRank
/// if a method lacks a result on some dataset.
std::map<std::string, std::vector<double>> ranks_per_dataset(const std::vector<MethodResult>& results);

struct RobustnessRow {
  std::string method;
  std::vector<double> ranks;
  double average = 0.0;
  double score = 0.0;
};

/// Normalized average rank: 1 for the best average, 0 for the worst.
std::vector<RobustnessRow> robustness(const std::map<std::string, std::vector<double>>& ranks);

/// `dataset,method,precision,recall,f1,rank,seconds`
std::string results_to_csv(const std::vector<MethodResult>& results);
std::vector<MethodResult> parse_results_csv(const std::string& text);
/// `method,ranks,average,score` with ranks joined by ';'.
std::string robustness_to_csv(const std::vector<RobustnessRow>& rows);

}  // namespace fired
