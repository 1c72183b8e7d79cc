#pragma once

#include "fired/core.hpp"

#include <json.hpp>

#include <string>

namespace fired {

using Json = nlohmann::json;

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

void to_json(Json& j, const MetricFrame& f);
void from_json(const Json& j, MetricFrame& f);
void to_json(Json& j, const LabelSeries& l);
void from_json(const Json& j, LabelSeries& l);
void to_json(Json& j, const SelectedFrame& s);
void from_json(const Json& j, SelectedFrame& s);
void to_json(Json& j, const ScoreVector& s);
void from_json(const Json& j, ScoreVector& s);
void to_json(Json& j, const ScoreMatrix& s);
void from_json(const Json& j, ScoreMatrix& s);
void to_json(Json& j, const Evaluation& e);
void from_json(const Json& j, Evaluation& e);
void to_json(Json& j, const RankedCause& r);
void from_json(const Json& j, RankedCause& r);
void to_json(Json& j, const DiagnosisReport& r);
void from_json(const Json& j, DiagnosisReport& r);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);
Json read_json(const std::string& path);
/// Pretty-printed with a trailing newline.
void write_json(const std::string& path, const Json& j);

}  // namespace fired
