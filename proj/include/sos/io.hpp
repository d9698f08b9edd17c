#pragma once

#include "sos/classify.hpp"
#include "sos/sos.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sos {

struct Table
{
    std::vector<std::string> header;
    MatrixXd values;
    // Present when a label column was requested.
    std::optional<std::vector<std::string>> labels;
};

/// Parses CSV with a header row. With `label_col` set, that column is read
/// verbatim as labels and every other column must be numeric.
Table read_csv(std::istream& in, const std::optional<std::string>& label_col, const std::string& source = "<input>");
Table read_csv_file(const std::string& path, const std::optional<std::string>& label_col);

Dataset<double> read_dataset(const std::string& path, const std::string& label_col);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

void write_dataset_csv(std::ostream& out, const Dataset<double>& ds, const std::string& label_col = "class");
void write_dataset_file(const std::string& path, const Dataset<double>& ds, const std::string& label_col = "class");

/// {"numErr", "fracErr", "feats", "fracFeats", "time"} as one JSON object.
std::string metrics_to_json(const Metrics& m);

inline constexpr int kModelVersion = 1;

std::string model_to_json(const SosModel<double>& model);
SosModel<double> model_from_json(const std::string& text);
void save_model(const std::string& path, const SosModel<double>& model);
SosModel<double> load_model(const std::string& path);

/// Headerless (or single non-numeric header) numeric CSV, e.g. penalty factors.
MatrixXd read_numeric_matrix(const std::string& path);

/// Reads "x,y,z" rows (an optional non-numeric header is skipped).
std::vector<Point3> read_positions(const std::string& path);

} // namespace sos
