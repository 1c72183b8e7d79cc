#include "fired/ingest.hpp"

#include "fired/error.hpp"

#include <charconv>
#include <sstream>
#include <string_view>

namespace fired {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    auto cell = line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    cells.push_back(cell);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cells;
}

[[noreturn]] void parse_fail(const std::string& origin, std::size_t line, std::string_view cell,
                             const std::string& what) {
  throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(line) + ": " + what + " '" +
                                         std::string(cell) + "'");
}

double parse_double(std::string_view cell, const std::string& origin, std::size_t line) {
  double v = 0.0;
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    parse_fail(origin, line, cell, "malformed number");
  }
  return v;
}

std::int64_t parse_int(std::string_view cell, const std::string& origin, std::size_t line) {
  std::int64_t v = 0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    parse_fail(origin, line, cell, "malformed integer");
  }
  return v;
}

std::uint8_t parse_label(std::string_view cell, const std::string& origin, std::size_t line) {
  const double v = parse_double(cell, origin, line);
  if (v != 0.0 && v != 1.0) {
    throw Error(ErrorCode::NonBinaryLabel, origin + ":" + std::to_string(line) + ": label '" +
                                               std::string(cell) + "'");
  }
  return static_cast<std::uint8_t>(v);
}

std::int64_t infer_interval(const std::vector<Timestamp>& ts) {
  return ts.size() >= 2 ? ts[1] - ts[0] : 1;
}

}  // namespace

MetricFrame parse_metric_csv(const std::string& text, const std::string& origin) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(ErrorCode::ParseError, origin + ": missing header");
  const auto header = split_cells(lines[0]);
  if (header.empty() || header[0] != "timestamp") {
    throw Error(ErrorCode::ParseError, origin + ": header must start with 'timestamp'");
  }
  std::vector<std::string> names(header.begin() + 1, header.end());
  const auto n = static_cast<Index>(names.size());
  const auto d = static_cast<Index>(lines.size() - 1);
  Eigen::MatrixXd values(d, n);
  std::vector<Timestamp> ts;
  ts.reserve(static_cast<std::size_t>(d));
  for (Index r = 0; r < d; ++r) {
    const std::size_t line_no = static_cast<std::size_t>(r) + 2;
    const auto cells = split_cells(lines[static_cast<std::size_t>(r) + 1]);
    if (static_cast<Index>(cells.size()) != n + 1) {
      throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(line_no) + ": expected " +
                                             std::to_string(n + 1) + " cells, found " +
                                             std::to_string(cells.size()));
    }
    ts.push_back(parse_int(cells[0], origin, line_no));
    for (Index c = 0; c < n; ++c) {
      values(r, c) = parse_double(cells[static_cast<std::size_t>(c) + 1], origin, line_no);
    }
  }
  const auto interval = infer_interval(ts);
  return MetricFrame(std::move(ts), std::move(values), std::move(names), interval);
}

LabelSeries parse_label_csv(const std::string& text, const std::string& origin) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(ErrorCode::ParseError, origin + ": missing header");
  const auto header = split_cells(lines[0]);
  if (header.size() != 2 || header[0] != "timestamp" || header[1] != "label") {
    throw Error(ErrorCode::ParseError, origin + ": header must be 'timestamp,label'");
  }
  std::vector<Timestamp> ts;
  std::vector<std::uint8_t> labels;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_cells(lines[r]);
    if (cells.size() != 2) {
      throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(r + 1) + ": expected 2 cells");
    }
    ts.push_back(parse_int(cells[0], origin, r + 1));
    labels.push_back(parse_label(cells[1], origin, r + 1));
  }
  return LabelSeries(std::move(ts), std::move(labels));
}

std::pair<MetricFrame, std::optional<LabelSeries>> load_csv(
    const std::string& path, const std::optional<std::string>& label_path) {
  MetricFrame frame = parse_metric_csv(read_file(path), path);
  std::optional<LabelSeries> labels;
  if (label_path) labels = parse_label_csv(read_file(*label_path), *label_path);
  return {std::move(frame), std::move(labels)};
}

std::pair<MetricFrame, LabelSeries> parse_smd(const std::string& values_text,
                                              const std::string& labels_text) {
  const auto rows = split_lines(values_text);
  const auto label_lines = split_lines(labels_text);
  if (rows.size() != label_lines.size()) {
    throw Error(ErrorCode::RowCountMismatch, std::to_string(rows.size()) + " value rows vs " +
                                                 std::to_string(label_lines.size()) + " labels");
  }
  const auto d = static_cast<Index>(rows.size());
  const Index n = d > 0 ? static_cast<Index>(split_cells(rows[0]).size()) : 0;
  Eigen::MatrixXd values(d, n);
  std::vector<Timestamp> ts(static_cast<std::size_t>(d));
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(d));
  for (Index r = 0; r < d; ++r) {
    const auto cells = split_cells(rows[static_cast<std::size_t>(r)]);
    if (static_cast<Index>(cells.size()) != n) {
      throw Error(ErrorCode::ParseError, "values:" + std::to_string(r + 1) + ": expected " +
                                             std::to_string(n) + " cells");
    }
    for (Index c = 0; c < n; ++c) {
      values(r, c) = parse_double(cells[static_cast<std::size_t>(c)], "values", static_cast<std::size_t>(r) + 1);
    }
    ts[static_cast<std::size_t>(r)] = r;
    labels[static_cast<std::size_t>(r)] =
        parse_label(label_lines[static_cast<std::size_t>(r)], "labels", static_cast<std::size_t>(r) + 1);
  }
  std::vector<std::string> names;
  for (Index c = 0; c < n; ++c) names.push_back("m" + std::to_string(c));
  MetricFrame frame(ts, std::move(values), std::move(names), 1);
  return {std::move(frame), LabelSeries(std::move(ts), std::move(labels))};
}

std::pair<MetricFrame, LabelSeries> load_smd(const std::string& values_path,
                                             const std::string& labels_path) {
  return parse_smd(read_file(values_path), read_file(labels_path));
}

std::string to_csv(const MetricFrame& frame) {
  std::string out = "timestamp";
  for (const auto& n : frame.names()) out += "," + n;
  out += "\n";
  for (Index r = 0; r < frame.rows(); ++r) {
    out += std::to_string(frame.timestamps()[static_cast<std::size_t>(r)]);
    for (Index c = 0; c < frame.cols(); ++c) {
      out += ",";
      out += format_double(frame.values()(r, c));
    }
    out += "\n";
  }
  return out;
}

std::string to_csv(const LabelSeries& labels) {
  std::string out = "timestamp,label\n";
  for (Index r = 0; r < labels.size(); ++r) {
    out += std::to_string(labels.timestamps()[static_cast<std::size_t>(r)]) + "," +
           std::to_string(labels.labels()[static_cast<std::size_t>(r)]) + "\n";
  }
  return out;
}

void to_json(Json& j, const GroundTruth& g) {
  Json edges = Json::array();
  for (const auto& [a, b] : g.edges) edges.push_back(Json::array({a, b}));
  Json windows = Json::array();
  for (const auto& w : g.windows) windows.push_back(Json::array({w.start, w.end}));
  j = Json{{"edges", std::move(edges)}, {"root_causes", g.root_causes}, {"windows", std::move(windows)}};
}

void from_json(const Json& j, GroundTruth& g) {
  g.edges.clear();
  g.windows.clear();
  for (const auto& e : j.at("edges")) g.edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  g.root_causes = j.at("root_causes").get<std::vector<std::string>>();
  for (const auto& w : j.at("windows")) g.windows.push_back({w.at(0).get<Timestamp>(), w.at(1).get<Timestamp>()});
}

}  // namespace fired
