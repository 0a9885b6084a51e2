#include "epicausal/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace epicausal {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("csv: cannot open " + path.string() + " for writing");
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("csv: cannot open " + path.string());
    return is;
}

void write_header(std::ofstream& os, int cols) {
    for (int t = 0; t < cols; ++t) {
        if (t) os << ',';
        os << 't' << (t + 1);
    }
    os << '\n';
}

double parse_double(const std::string& tok, const std::filesystem::path& path) {
    errno = 0;
    char* end = nullptr;
    const double out = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || errno == ERANGE) {
        throw std::runtime_error("csv: bad number '" + tok + "' in " + path.string());
    }
    return out;
}

long parse_int(const std::string& tok, const std::filesystem::path& path) {
    errno = 0;
    char* end = nullptr;
    const long out = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0' || errno == ERANGE) {
        throw std::runtime_error("csv: bad integer '" + tok + "' in " + path.string());
    }
    return out;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path, int* cols) {
    auto is = open_in(path);
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("csv: " + path.string() + " is empty");
    }
    *cols = static_cast<int>(split_csv_line(line).size());
    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto toks = split_csv_line(line);
        if (static_cast<int>(toks.size()) != *cols) {
            throw std::runtime_error("csv: ragged row in " + path.string());
        }
        rows.push_back(std::move(toks));
    }
    return rows;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
    auto os = open_out(path);
    write_header(os, static_cast<int>(m.cols()));
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
        for (Eigen::Index t = 0; t < m.cols(); ++t) {
            if (t) os << ',';
            os << format_double(m(j, t));
        }
        os << '\n';
    }
    if (!os) throw std::runtime_error("csv: write failed for " + path.string());
}

void write_matrix_csv(const Eigen::MatrixXi& m, const std::filesystem::path& path) {
    auto os = open_out(path);
    write_header(os, static_cast<int>(m.cols()));
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
        for (Eigen::Index t = 0; t < m.cols(); ++t) {
            if (t) os << ',';
            os << m(j, t);
        }
        os << '\n';
    }
    if (!os) throw std::runtime_error("csv: write failed for " + path.string());
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
    int cols = 0;
    const auto rows = read_rows(path, &cols);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        for (int t = 0; t < cols; ++t) {
            m(static_cast<Eigen::Index>(j), t) = parse_double(rows[j][static_cast<std::size_t>(t)], path);
        }
    }
    return m;
}

Eigen::MatrixXi read_imatrix_csv(const std::filesystem::path& path) {
    int cols = 0;
    const auto rows = read_rows(path, &cols);
    Eigen::MatrixXi m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        for (int t = 0; t < cols; ++t) {
            m(static_cast<Eigen::Index>(j), t) =
                static_cast<int>(parse_int(rows[j][static_cast<std::size_t>(t)], path));
        }
    }
    return m;
}

void write_vector_csv(const Eigen::VectorXd& v, const std::string& name,
                      const std::filesystem::path& path) {
    auto os = open_out(path);
    os << name << '\n';
    for (Eigen::Index j = 0; j < v.size(); ++j) os << format_double(v(j)) << '\n';
    if (!os) throw std::runtime_error("csv: write failed for " + path.string());
}

Eigen::VectorXd read_vector_csv(const std::filesystem::path& path) {
    auto is = open_in(path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv: " + path.string() + " is empty");
    std::vector<double> vals;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        vals.push_back(parse_double(split_csv_line(line).at(0), path));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t j = 0; j < vals.size(); ++j) v(static_cast<Eigen::Index>(j)) = vals[j];
    return v;
}

}  // namespace epicausal
