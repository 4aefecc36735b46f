#pragma once

#include "bsps/tuning.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace bsps {

struct CsvTable {
    std::vector<std::string> header;
    MatrixXd values;
};

/// Comma-separated numeric table with a mandatory header row. Throws DataError.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// %.17g formatting, the round-trip representation used in every CSV output.
std::string format_double(double v);

void write_csv(std::ostream& out, const std::vector<std::string>& header, const MatrixXd& values);

void write_cv_csv(std::ostream& out, const CvReport& report);

nlohmann::json to_json(const CvReport& report);
CvReport cv_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);

std::string serialize_model(const FittedModel& model);
FittedModel parse_model(const std::string& text);

}  // namespace bsps
