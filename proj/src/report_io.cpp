#include "drlogit/report_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace drlogit {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(const std::string& cell, const std::string& source, size_t row,
                    const std::string& column) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw std::runtime_error(source + ": row " + std::to_string(row) + ", column '" + column +
                                 "': not a number ('" + cell + "')");
    }
    return v;
}

// Column index for prefix1..prefixK, requiring the run to be contiguous.
std::vector<size_t> numbered_columns(const std::map<std::string, size_t>& index, char prefix,
                                     const std::string& source) {
    std::vector<size_t> cols;
    for (int k = 1;; ++k) {
        const auto it = index.find(std::string(1, prefix) + std::to_string(k));
        if (it == index.end()) break;
        cols.push_back(it->second);
    }
    for (const auto& [name, _] : index) {
        if (name.size() > 1 && name[0] == prefix) {
            const std::string digits = name.substr(1);
            if (digits.find_first_not_of("0123456789") == std::string::npos &&
                std::stoul(digits) > cols.size()) {
                throw std::runtime_error(source + ": column '" + name + "' without " + prefix +
                                         std::to_string(cols.size() + 1));
            }
        }
    }
    return cols;
}

}  // namespace

Dataset read_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(source + ": empty file");
    const std::vector<std::string> header = split_line(line);
    std::map<std::string, size_t> index;
    for (size_t c = 0; c < header.size(); ++c) {
        if (!index.emplace(header[c], c).second) {
            throw std::runtime_error(source + ": duplicate column '" + header[c] + "'");
        }
    }
    const auto y_it = index.find("y");
    if (y_it == index.end()) throw std::runtime_error(source + ": missing required column 'y'");
    const std::vector<size_t> z_cols = numbered_columns(index, 'z', source);
    const std::vector<size_t> x_cols = numbered_columns(index, 'x', source);
    if (z_cols.empty()) throw std::runtime_error(source + ": missing required column 'z1'");
    if (1 + z_cols.size() + x_cols.size() != header.size()) {
        throw std::runtime_error(source + ": unexpected columns (expected y, z1..zp, x1..xq)");
    }

    std::vector<std::vector<double>> rows;
    std::vector<int> ys;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error(source + ": row " + std::to_string(row) + " has " +
                                     std::to_string(cells.size()) + " cells, header has " +
                                     std::to_string(header.size()));
        }
        const double yv = parse_number(cells[y_it->second], source, row, "y");
        if (yv != 0.0 && yv != 1.0) {
            throw std::runtime_error(source + ": row " + std::to_string(row) + ": y must be 0 or 1");
        }
        ys.push_back(static_cast<int>(yv));
        std::vector<double> vals;
        for (size_t c : z_cols) vals.push_back(parse_number(cells[c], source, row, header[c]));
        for (size_t c : x_cols) vals.push_back(parse_number(cells[c], source, row, header[c]));
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw std::runtime_error(source + ": no data rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(z_cols.size());
    const auto q = static_cast<Eigen::Index>(x_cols.size());
    Dataset data;
    data.y.resize(n);
    data.z.resize(n, p);
    data.x.resize(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        data.y(i) = ys[static_cast<size_t>(i)];
        for (Eigen::Index j = 0; j < p; ++j) data.z(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
        for (Eigen::Index j = 0; j < q; ++j) data.x(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(p + j)];
    }
    return data;
}

Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file '" + path + "'");
    return read_csv(in, path);
}

std::string format_exact(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string format_sig6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void write_csv(const Dataset& data, std::ostream& out) {
    out << "y";
    for (Eigen::Index j = 0; j < data.p(); ++j) out << ",z" << j + 1;
    for (Eigen::Index j = 0; j < data.q(); ++j) out << ",x" << j + 1;
    out << "\n";
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        out << data.y(i);
        for (Eigen::Index j = 0; j < data.p(); ++j) out << ',' << format_exact(data.z(i, j));
        for (Eigen::Index j = 0; j < data.q(); ++j) out << ',' << format_exact(data.x(i, j));
        out << "\n";
    }
}

void write_csv_file(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_csv(data, out);
}

nlohmann::json to_json(const EstimatorSummary& s, const std::string& scenario) {
    return {{"scenario", scenario}, {"estimator", s.estimator}, {"bias", s.bias},
            {"sd", s.sd},           {"mean_se", s.mean_se},     {"rmse", s.rmse},
            {"coverage", s.coverage}, {"mcse", s.mcse},         {"n_fail", s.n_fail}};
}

nlohmann::json to_json(const std::vector<MonteCarloSummary>& summaries) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& summary : summaries) {
        for (const auto& s : summary.estimators) rows.push_back(to_json(s, summary.scenario));
    }
    return rows;
}

std::string summary_csv(const MonteCarloSummary& summary) {
    std::ostringstream out;
    out << "scenario,estimator,bias,sd,mean_se,rmse,coverage,mcse,n_fail\n";
    for (const auto& s : summary.estimators) {
        out << summary.scenario << ',' << s.estimator << ',' << format_exact(s.bias) << ','
            << format_exact(s.sd) << ',' << format_exact(s.mean_se) << ',' << format_exact(s.rmse)
            << ',' << format_exact(s.coverage) << ',' << format_exact(s.mcse) << ',' << s.n_fail
            << "\n";
    }
    return out.str();
}

std::string summary_markdown(const std::vector<MonteCarloSummary>& summaries) {
    std::ostringstream out;
    out << "| scenario | estimator | bias | sd | mean_se | rmse | coverage | mcse | n_fail |\n";
    out << "|---|---|---:|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& summary : summaries) {
        for (const auto& s : summary.estimators) {
            out << "| " << summary.scenario << " | " << s.estimator << " | " << format_sig6(s.bias)
                << " | " << format_sig6(s.sd) << " | " << format_sig6(s.mean_se) << " | "
                << format_sig6(s.rmse) << " | " << format_sig6(s.coverage) << " | "
                << format_sig6(s.mcse) << " | " << s.n_fail << " |\n";
        }
    }
    return out.str();
}

nlohmann::json to_json(const std::string& name, const EstimateReport& report) {
    nlohmann::json ci = nlohmann::json::array();
    for (const auto& [lo, hi] : report.wald_ci) ci.push_back({lo, hi});
    std::vector<double> beta(report.beta_hat.data(), report.beta_hat.data() + report.beta_hat.size());
    std::vector<double> se(report.std_errors.data(), report.std_errors.data() + report.std_errors.size());
    nlohmann::json cov = nlohmann::json::array();
    for (Eigen::Index r = 0; r < report.covariance.rows(); ++r) {
        std::vector<double> row(static_cast<size_t>(report.covariance.cols()));
        for (Eigen::Index c = 0; c < report.covariance.cols(); ++c) row[static_cast<size_t>(c)] = report.covariance(r, c);
        cov.push_back(row);
    }
    return {{"estimator", name},
            {"beta", beta},
            {"std_error", se},
            {"covariance", cov},
            {"level", report.level},
            {"ci", ci},
            {"phi", std::string(to_string(report.phi_used.variant))},
            {"side", report.side == Side::Y0 ? "y0" : "y1"},
            {"diagnostics",
             {{"iterations", report.diagnostics.iterations},
              {"final_eq_norm", report.diagnostics.final_eq_norm},
              {"jacobian_condition", report.diagnostics.jacobian_condition},
              {"step_halvings", report.diagnostics.step_halvings},
              {"converged", report.diagnostics.converged},
              {"restarted", report.diagnostics.restarted}}}};
}

}  // namespace drlogit
