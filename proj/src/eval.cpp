#include "fired/eval.hpp"

#include "fired/error.hpp"
#include "fired/serialize.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace fired {

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

Evaluation prf1(const std::vector<std::uint8_t>& verdicts, const std::vector<std::uint8_t>& labels) {
  if (verdicts.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(verdicts.size()) + " verdicts vs " +
                                               std::to_string(labels.size()) + " labels");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw Error(ErrorCode::NonBinaryLabel, "label at row " + std::to_string(i));
    tp += verdicts[i] && labels[i];
    fp += verdicts[i] && !labels[i];
    fn += !verdicts[i] && labels[i];
  }
  Evaluation e;
  e.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  e.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  e.f1 = f1_score(e.precision, e.recall);
  return e;
}

std::map<std::string, double> rank_by_f1(const std::vector<MethodResult>& results) {
  std::vector<const MethodResult*> sorted;
  for (const auto& r : results) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->f1 > b->f1; });
  std::map<std::string, double> ranks;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j]->f1 == sorted[i]->f1) ++j;
    const double mean_position = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t m = i; m < j; ++m) {
      if (!ranks.emplace(sorted[m]->method, mean_position).second) {
        throw Error(ErrorCode::DuplicateName, "method '" + sorted[m]->method + "' listed twice");
      }
    }
    i = j;
  }
  return ranks;
}

std::map<std::string, std::vector<double>> ranks_per_dataset(const std::vector<MethodResult>& results) {
  std::map<std::string, std::vector<MethodResult>> by_dataset;
  std::set<std::string> methods;
  for (const auto& r : results) {
    by_dataset[r.dataset].push_back(r);
    methods.insert(r.method);
  }
  std::map<std::string, std::vector<double>> out;
  for (const auto& [dataset, rows] : by_dataset) {
    const auto ranks = rank_by_f1(rows);
    for (const auto& m : methods) {
      const auto it = ranks.find(m);
      if (it == ranks.end()) throw Error(ErrorCode::MissingRank, "method '" + m + "' has no result on '" + dataset + "'");
      out[m].push_back(it->second);
    }
  }
  return out;
}

std::vector<RobustnessRow> robustness(const std::map<std::string, std::vector<double>>& ranks) {
  if (ranks.empty()) return {};
  const std::size_t datasets = ranks.begin()->second.size();
  std::vector<RobustnessRow> rows;
  for (const auto& [method, r] : ranks) {
    if (r.empty() || r.size() != datasets) {
      throw Error(ErrorCode::MissingRank, "method '" + method + "' is not ranked on every dataset");
    }
    RobustnessRow row{method, r, 0.0, 0.0};
    for (double v : r) {
      if (!(v >= 1.0)) throw Error(ErrorCode::MissingRank, "ranks start at 1");
      row.average += v;
    }
    row.average /= static_cast<double>(r.size());
    rows.push_back(std::move(row));
  }
  const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.average < b.average;
  });
  const double best = lo->average;
  const double worst = hi->average;
  for (auto& row : rows) row.score = best == worst ? 1.0 : (worst - row.average) / (worst - best);
  return rows;
}

std::string results_to_csv(const std::vector<MethodResult>& results) {
  std::map<std::string, std::map<std::string, double>> ranks;
  {
    std::map<std::string, std::vector<MethodResult>> by_dataset;
    for (const auto& r : results) by_dataset[r.dataset].push_back(r);
    for (const auto& [dataset, rows] : by_dataset) ranks[dataset] = rank_by_f1(rows);
  }
  std::ostringstream out;
  out << "dataset,method,precision,recall,f1,rank,seconds\n";
  for (const auto& r : results) {
    out << r.dataset << ',' << r.method << ',' << format_double(r.precision) << ',' << format_double(r.recall)
        << ',' << format_double(r.f1) << ',' << format_double(ranks[r.dataset][r.method]) << ','
        << format_double(r.seconds) << '\n';
  }
  return out.str();
}

std::vector<MethodResult> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty results CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) header.push_back(cell);
  }
  auto column = [&](const std::string& name, bool required) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw Error(ErrorCode::ParseError, "results CSV lacks column '" + name + "'");
      return -1;
    }
    return it - header.begin();
  };
  const auto c_method = column("method", true);
  const auto c_f1 = column("f1", true);
  const auto c_dataset = column("dataset", false);
  const auto c_p = column("precision", false);
  const auto c_r = column("recall", false);
  const auto c_s = column("seconds", false);

  std::vector<MethodResult> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "results CSV line " + std::to_string(line_no) + ": wrong cell count");
    }
    auto number = [&](std::ptrdiff_t c) {
      if (c < 0) return 0.0;
      try {
        return std::stod(cells[static_cast<std::size_t>(c)]);
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::ParseError, "results CSV line " + std::to_string(line_no));
      }
    };
    MethodResult r;
    r.method = cells[static_cast<std::size_t>(c_method)];
    r.dataset = c_dataset >= 0 ? cells[static_cast<std::size_t>(c_dataset)] : std::string{};
    r.precision = number(c_p);
    r.recall = number(c_r);
    r.f1 = number(c_f1);
    r.seconds = number(c_s);
    out.push_back(std::move(r));
  }
  return out;
}

std::string robustness_to_csv(const std::vector<RobustnessRow>& rows) {
  std::ostringstream out;
  out << "method,ranks,average,score\n";
  for (const auto& row : rows) {
    out << row.method << ',';
    for (std::size_t i = 0; i < row.ranks.size(); ++i) out << (i ? ";" : "") << format_double(row.ranks[i]);
    out << ',' << format_double(row.average) << ',' << format_double(row.score) << '\n';
  }
  return out.str();
}

}  // namespace fired
