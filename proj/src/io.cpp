#include "sos/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sos {

namespace {

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out)
{
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* first = t.data() + (t[0] == '+' ? 1 : 0);
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size();
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("unreadable_file", "cannot open '" + path + "'");
    return in;
}

} // namespace

Table read_csv(std::istream& in, const std::optional<std::string>& label_col, const std::string& source)
{
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) throw DataError("empty_file", source + ": empty file");
    Table t;
    for (auto& h : split_line(line)) t.header.push_back(trim(h));
    const std::size_t cols = t.header.size();

    std::optional<std::size_t> label_idx;
    if (label_col) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (t.header[j] == *label_col) label_idx = j;
        }
        if (!label_idx) throw DataError("missing_label_column", source + ": no column named '" + *label_col + "'");
        t.labels.emplace();
    }

    std::vector<std::vector<double>> rows;
    const std::size_t numeric = cols - (label_idx ? 1 : 0);
    long row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != cols) {
            throw DataError("ragged_row", source + ": row " + std::to_string(row_no) + " has " +
                                              std::to_string(cells.size()) + " fields, expected " +
                                              std::to_string(cols));
        }
        std::vector<double> values;
        values.reserve(numeric);
        for (std::size_t j = 0; j < cols; ++j) {
            if (label_idx && j == *label_idx) {
                t.labels->push_back(trim(cells[j]));
                continue;
            }
            double v;
            if (!parse_double(cells[j], v)) {
                throw DataError("parse_error", source + ": row " + std::to_string(row_no) + ", column " +
                                                   std::to_string(j + 1) + " ('" + t.header[j] +
                                                   "'): not a number: '" + cells[j] + "'");
            }
            values.push_back(v);
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw DataError("empty_file", source + ": no data rows");

    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(numeric));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < numeric; ++j) t.values(i, j) = rows[i][j];
    }
    if (label_idx) t.header.erase(t.header.begin() + *label_idx);
    return t;
}

Table read_csv_file(const std::string& path, const std::optional<std::string>& label_col)
{
    auto in = open_in(path);
    return read_csv(in, label_col, path);
}

Dataset<double> read_dataset(const std::string& path, const std::string& label_col)
{
    auto t = read_csv_file(path, label_col);
    return make_dataset<double>(std::move(t.values), std::move(*t.labels));
}

std::string format_double(double v)
{
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_dataset_csv(std::ostream& out, const Dataset<double>& ds, const std::string& label_col)
{
    for (Eigen::Index j = 0; j < ds.p(); ++j) out << 'x' << j + 1 << ',';
    out << label_col << '\n';
    std::string line;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        line.clear();
        for (Eigen::Index j = 0; j < ds.p(); ++j) {
            line += format_double(ds.features(i, j));
            line += ',';
        }
        line += ds.labels[i];
        line += '\n';
        out << line;
    }
}

void write_dataset_file(const std::string& path, const Dataset<double>& ds, const std::string& label_col)
{
    std::ofstream out(path);
    if (!out) throw DataError("unwritable_file", "cannot write '" + path + "'");
    write_dataset_csv(out, ds, label_col);
}

namespace {

using nlohmann::json;

json matrix_json(const MatrixXd& M)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

MatrixXd json_matrix(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& name)
{
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
        throw DataError("bad_model", "model field '" + name + "' has wrong row count");
    }
    MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw DataError("bad_model", "model field '" + name + "' has wrong column count");
        }
        for (Eigen::Index k = 0; k < cols; ++k) M(i, k) = row[k].get<double>();
    }
    return M;
}

VectorXd json_vector(const json& j, Eigen::Index n, const std::string& name)
{
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
        throw DataError("bad_model", "model field '" + name + "' has wrong length");
    }
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = j[i].get<double>();
    return v;
}

json vector_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

} // namespace

std::string metrics_to_json(const Metrics& m)
{
    json j = {{"numErr", m.numErr}, {"fracErr", m.fracErr}, {"feats", m.feats}, {"fracFeats", m.fracFeats},
              {"time", m.time}};
    return j.dump();
}

std::string model_to_json(const SosModel<double>& model)
{
    const auto& c = model.config;
    json j;
    j["version"] = kModelVersion;
    j["p"] = model.p();
    j["K"] = model.K();
    j["q"] = model.q();
    j["label_vocab"] = model.label_vocab;
    j["column_means"] = vector_json(model.column_means);
    j["column_scales"] = model.column_scales ? vector_json(*model.column_scales) : json(nullptr);
    j["B"] = matrix_json(model.B);
    j["Theta"] = matrix_json(model.Theta);
    j["centroids"] = matrix_json(model.centroids);
    j["config"] = {
        {"gamma", c.gamma},
        {"lambda", c.lambda},
        {"omega", c.omega_label},
        {"solver", solver_name(c.solver)},
        {"inner_tol", c.inner.tol},
        {"inner_max", c.inner.max_iter},
        {"mu", c.inner.mu},
        {"outer_tol", c.outer_tol},
        {"outer_max", c.max_outer},
        {"theta_init", c.theta_init == ThetaInit::Random ? "random" : "fixed"},
        {"seed", c.seed},
        {"scale", c.scale},
    };
    json dirs = json::array();
    for (const auto& d : model.directions) {
        dirs.push_back({{"outer_iterations", d.outer_iterations},
                        {"inner_iterations", d.inner_iterations},
                        {"converged", d.converged},
                        {"final_objective", d.final_objective},
                        {"kkt_residual", d.final_kkt},
                        {"feats", count_features<double>(d.beta)}});
    }
    j["diagnostics"] = {{"directions", dirs}, {"time", model.fit_seconds}};
    return j.dump(1);
}

SosModel<double> model_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError("bad_model", std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != kModelVersion) {
            throw DataError("bad_model", "unsupported model version " + j.at("version").dump());
        }
        const Eigen::Index p = j.at("p").get<Eigen::Index>();
        const Eigen::Index K = j.at("K").get<Eigen::Index>();
        const Eigen::Index q = j.at("q").get<Eigen::Index>();
        SosModel<double> m;
        m.label_vocab = j.at("label_vocab").get<std::vector<std::string>>();
        if (static_cast<Eigen::Index>(m.label_vocab.size()) != K) throw DataError("bad_model", "label_vocab size != K");
        m.column_means = json_vector(j.at("column_means"), p, "column_means");
        if (!j.at("column_scales").is_null()) m.column_scales = json_vector(j["column_scales"], p, "column_scales");
        m.B = json_matrix(j.at("B"), p, q, "B");
        m.Theta = json_matrix(j.at("Theta"), K, q, "Theta");
        m.centroids = json_matrix(j.at("centroids"), K, q, "centroids");

        const auto& c = j.at("config");
        m.config.q = static_cast<int>(q);
        m.config.gamma = c.at("gamma").get<double>();
        m.config.lambda = c.at("lambda").get<double>();
        m.config.omega_label = c.at("omega").get<std::string>();
        m.config.solver = parse_solver(c.at("solver").get<std::string>());
        m.config.inner.tol = c.at("inner_tol").get<double>();
        m.config.inner.max_iter = c.at("inner_max").get<int>();
        m.config.inner.mu = c.at("mu").get<double>();
        m.config.outer_tol = c.at("outer_tol").get<double>();
        m.config.max_outer = c.at("outer_max").get<int>();
        m.config.theta_init = c.at("theta_init").get<std::string>() == "random" ? ThetaInit::Random
                                                                                : ThetaInit::FixedProjection;
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.config.scale = c.at("scale").get<bool>();
        if (j.contains("diagnostics")) m.fit_seconds = j["diagnostics"].value("time", 0.0);
        return m;
    } catch (const json::exception& e) {
        throw DataError("bad_model", std::string("malformed model file: ") + e.what());
    }
}

void save_model(const std::string& path, const SosModel<double>& model)
{
    std::ofstream out(path);
    if (!out) throw DataError("unwritable_file", "cannot write '" + path + "'");
    out << model_to_json(model) << '\n';
}

SosModel<double> load_model(const std::string& path)
{
    auto in = open_in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

MatrixXd read_numeric_matrix(const std::string& path)
{
    auto in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    long row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        std::vector<double> values(cells.size());
        bool ok = true;
        std::size_t bad = 0;
        for (std::size_t k = 0; k < cells.size() && ok; ++k) {
            ok = parse_double(cells[k], values[k]);
            bad = k;
        }
        if (!ok) {
            if (rows.empty() && row_no == 1) continue;
            throw DataError("parse_error", path + ": row " + std::to_string(row_no) + ", column " +
                                               std::to_string(bad + 1) + ": not a number");
        }
        if (!rows.empty() && values.size() != rows.front().size()) {
            throw DataError("ragged_row", path + ": row " + std::to_string(row_no) + " has " +
                                              std::to_string(values.size()) + " fields, expected " +
                                              std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw DataError("empty_file", path + ": no numeric rows");
    MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
    }
    return M;
}

std::vector<Point3> read_positions(const std::string& path)
{
    auto in = open_in(path);
    std::vector<Point3> pts;
    std::string line;
    long row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        Point3 pt{0.0, 0.0, 0.0};
        if (cells.size() < 1 || cells.size() > 3) {
            throw DataError("parse_error", path + ": row " + std::to_string(row_no) + ": expected 1 to 3 coordinates");
        }
        bool ok = true;
        for (std::size_t k = 0; k < cells.size(); ++k) ok = ok && parse_double(cells[k], pt[k]);
        if (!ok) {
            if (row_no == 1) continue;
            throw DataError("parse_error", path + ": row " + std::to_string(row_no) + ": not numeric");
        }
        pts.push_back(pt);
    }
    if (pts.empty()) throw DataError("empty_file", path + ": no positions");
    return pts;
}

} // namespace sos
