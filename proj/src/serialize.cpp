#include "fired/serialize.hpp"

#include "fired/error.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace fired {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows) throw Error(ErrorCode::ParseError, "matrix row count");
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = data[static_cast<std::size_t>(r)];
    if (static_cast<Index>(row.size()) != cols) throw Error(ErrorCode::ParseError, "matrix col count");
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

namespace {

Json row_to_json(const Eigen::RowVectorXd& v) { return vector_to_json(v.transpose()); }
Eigen::RowVectorXd row_from_json(const Json& j) { return vector_from_json(j).transpose(); }

}  // namespace

void to_json(Json& j, const MetricFrame& f) {
  j = Json{{"timestamps", f.timestamps()},
           {"names", f.names()},
           {"interval", f.interval()},
           {"values", matrix_to_json(f.values())}};
}

void from_json(const Json& j, MetricFrame& f) {
  f = MetricFrame(j.at("timestamps").get<std::vector<Timestamp>>(), matrix_from_json(j.at("values")),
                  j.at("names").get<std::vector<std::string>>(), j.at("interval").get<std::int64_t>());
}

void to_json(Json& j, const LabelSeries& l) {
  j = Json{{"timestamps", l.timestamps()}, {"labels", l.labels()}};
}

void from_json(const Json& j, LabelSeries& l) {
  l = LabelSeries(j.at("timestamps").get<std::vector<Timestamp>>(),
                  j.at("labels").get<std::vector<std::uint8_t>>());
}

void to_json(Json& j, const SelectedFrame& s) {
  j = Json{{"method", to_string(s.method)},
           {"timestamps", s.timestamps},
           {"names", s.names},
           {"retained", s.retained},
           {"values", matrix_to_json(s.values)},
           {"projection", matrix_to_json(s.projection)},
           {"means", row_to_json(s.means)},
           {"stds", row_to_json(s.stds)}};
}

void from_json(const Json& j, SelectedFrame& s) {
  s.method = selection_method_from_string(j.at("method").get<std::string>());
  s.timestamps = j.at("timestamps").get<std::vector<Timestamp>>();
  s.names = j.at("names").get<std::vector<std::string>>();
  s.retained = j.at("retained").get<std::vector<Index>>();
  s.values = matrix_from_json(j.at("values"));
  s.projection = matrix_from_json(j.at("projection"));
  s.means = row_from_json(j.at("means"));
  s.stds = row_from_json(j.at("stds"));
}

void to_json(Json& j, const ScoreVector& s) {
  j = Json{{"learner", s.learner}, {"values", vector_to_json(s.values)}};
}

void from_json(const Json& j, ScoreVector& s) {
  s.learner = j.at("learner").get<std::string>();
  s.values = vector_from_json(j.at("values"));
}

void to_json(Json& j, const ScoreMatrix& s) {
  j = Json{{"learners", s.learners},
           {"values", matrix_to_json(s.values)},
           {"means", row_to_json(s.means)},
           {"stds", row_to_json(s.stds)}};
}

void from_json(const Json& j, ScoreMatrix& s) {
  s.learners = j.at("learners").get<std::vector<std::string>>();
  s.values = matrix_from_json(j.at("values"));
  s.means = row_from_json(j.at("means"));
  s.stds = row_from_json(j.at("stds"));
}

void to_json(Json& j, const Evaluation& e) {
  j = Json{{"precision", e.precision}, {"recall", e.recall}, {"f1", e.f1}, {"seconds", e.seconds}};
}

void from_json(const Json& j, Evaluation& e) {
  e.precision = j.at("precision").get<double>();
  e.recall = j.at("recall").get<double>();
  e.f1 = j.at("f1").get<double>();
  e.seconds = j.at("seconds").get<double>();
}

void to_json(Json& j, const RankedCause& r) {
  j = Json{{"node", r.node}, {"count", r.count}, {"rank", r.rank}};
}

void from_json(const Json& j, RankedCause& r) {
  r.node = j.at("node").get<std::string>();
  r.count = j.at("count").get<std::size_t>();
  r.rank = j.at("rank").get<std::size_t>();
}

void to_json(Json& j, const DiagnosisReport& r) {
  j = Json{{"timestamps", r.timestamps},
           {"verdicts", r.verdicts},
           {"probabilities", r.probabilities},
           {"threshold", r.threshold}};
  if (r.evaluation) j["evaluation"] = *r.evaluation;
  if (r.root_causes) j["root_causes"] = *r.root_causes;
}

void from_json(const Json& j, DiagnosisReport& r) {
  r.timestamps = j.at("timestamps").get<std::vector<Timestamp>>();
  r.verdicts = j.at("verdicts").get<std::vector<std::uint8_t>>();
  r.probabilities = j.at("probabilities").get<std::vector<double>>();
  r.threshold = j.at("threshold").get<double>();
  r.evaluation.reset();
  r.root_causes.reset();
  if (j.contains("evaluation")) r.evaluation = j.at("evaluation").get<Evaluation>();
  if (j.contains("root_causes")) r.root_causes = j.at("root_causes").get<std::vector<RankedCause>>();
}

std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

}  // namespace fired
