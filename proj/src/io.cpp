#include "bsps/io.hpp"

#include "bsps/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace bsps {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& raw, std::size_t line_no) {
    const std::string s = trim(raw);
    double value = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    if (!s.empty() && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw Error(ErrorKind::DataError, "line " + std::to_string(line_no) + ": '" + s + "' is not a number");
    }
    return value;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw Error(ErrorKind::DataError, "missing header row");
    for (const auto& name : split_line(line)) table.header.push_back(trim(name));

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != table.header.size()) {
            throw Error(ErrorKind::DataError, "line " + std::to_string(line_no) + " has " +
                                                  std::to_string(fields.size()) + " fields, header has " +
                                                  std::to_string(table.header.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_number(f, line_no));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorKind::DataError, "no data rows");
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        }
    }
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::DataError, "cannot open " + path);
    return read_csv(in);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const MatrixXd& values) {
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
        out << '\n';
    }
}

void write_cv_csv(std::ostream& out, const CvReport& report) {
    out << "t,u";
    for (int f = 1; f <= report.folds; ++f) out << ",fold_" << f;
    out << ",mean_mspe,selected\n";
    for (std::size_t k = 0; k < report.grid.size(); ++k) {
        out << report.grid[k].first << ',' << report.grid[k].second;
        for (double v : report.fold_mspe[k]) out << ',' << format_double(v);
        out << ',' << format_double(report.mean_mspe[k]) << ','
            << (report.grid[k] == report.selected ? 1 : 0) << '\n';
    }
}

namespace {

nlohmann::json vector_json(const VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

VectorXd vector_from(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const VectorXd>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

nlohmann::json to_json(const CvReport& report) {
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& [t, u] : report.grid) grid.push_back({t, u});
    return {
        {"grid", grid},
        {"fold_mspe", report.fold_mspe},
        {"mean_mspe", report.mean_mspe},
        {"selected", {report.selected.first, report.selected.second}},
        {"folds", report.folds},
        {"seed", report.seed},
    };
}

CvReport cv_report_from_json(const nlohmann::json& j) {
    CvReport r;
    for (const auto& cell : j.at("grid")) r.grid.emplace_back(cell.at(0).get<int>(), cell.at(1).get<int>());
    r.fold_mspe = j.at("fold_mspe").get<std::vector<std::vector<double>>>();
    r.mean_mspe = j.at("mean_mspe").get<std::vector<double>>();
    r.selected = {j.at("selected").at(0).get<int>(), j.at("selected").at(1).get<int>()};
    r.folds = j.at("folds").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

nlohmann::json to_json(const FittedModel& model) {
    const SplitEnsemble& e = model.ensemble;
    // Column-major: model g occupies entries [g * p, (g + 1) * p).
    std::vector<double> beta(e.beta.data(), e.beta.data() + e.beta.size());
    nlohmann::json j = {
        {"p", model.p()},
        {"G", e.groups()},
        {"t", e.constraints.t},
        {"u", e.constraints.u},
        {"beta", beta},
        {"ensemble_beta", vector_json(model.ensemble_beta)},
        {"col_means", vector_json(model.col_means)},
        {"col_scales", vector_json(model.col_scales)},
        {"y_mean", model.y_mean},
        {"y_scale", model.y_scale},
        {"objective", e.objective},
    };
    if (model.cv) j["cv"] = to_json(*model.cv);
    return j;
}

FittedModel model_from_json(const nlohmann::json& j) {
    try {
        FittedModel model;
        const auto p = j.at("p").get<Index>();
        const auto groups = j.at("G").get<int>();
        const auto beta = j.at("beta").get<std::vector<double>>();
        if (static_cast<Index>(beta.size()) != p * groups) {
            throw Error(ErrorKind::DataError, "beta must hold p * G entries");
        }
        SplitEnsemble& e = model.ensemble;
        e.beta = Eigen::Map<const MatrixXd>(beta.data(), p, groups);
        e.constraints.groups = groups;
        e.constraints.t = j.at("t").get<int>();
        e.constraints.u = j.at("u").get<std::vector<int>>();
        e.objective = j.at("objective").get<double>();
        for (int g = 0; g < groups; ++g) e.supports.push_back(support_of(e.beta.col(g)));
        model.ensemble_beta = vector_from(j.at("ensemble_beta"));
        model.col_means = vector_from(j.at("col_means"));
        model.col_scales = vector_from(j.at("col_scales"));
        model.y_mean = j.at("y_mean").get<double>();
        model.y_scale = j.at("y_scale").get<double>();
        if (model.ensemble_beta.size() != p || model.col_means.size() != p || model.col_scales.size() != p ||
            static_cast<Index>(e.constraints.u.size()) != p) {
            throw Error(ErrorKind::DataError, "model vectors must have length p");
        }
        if (j.contains("cv")) model.cv = cv_report_from_json(j.at("cv"));
        return model;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::DataError, std::string("malformed model JSON: ") + ex.what());
    }
}

std::string serialize_model(const FittedModel& model) { return to_json(model).dump(2) + "\n"; }

FittedModel parse_model(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::DataError, std::string("invalid JSON: ") + ex.what());
    }
    return model_from_json(j);
}

}  // namespace bsps
