#pragma once

// Plain CSV for matrices and vectors: row-major, no header, doubles written
// with 17 significant digits so they round-trip exactly.

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fvsr/errors.hpp"
#include "fvsr/model.hpp"

namespace fvsr::csv {

inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (ec != std::errc{}) throw InvalidArgument("cannot format value");
    return std::string(buf, end);
}

inline double parse_double(std::string_view tok, const std::string& where) {
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
    if (tok == "inf" || tok == "+inf") return kNoNoise;
    if (tok == "-inf") return -kNoNoise;
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw InvalidArgument(where + ": cannot parse '" + std::string(tok) + "' as a number");
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline Matrix read_matrix(std::istream& in, const std::string& name) {
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::string where = name + ":" + std::to_string(lineno);
        std::vector<double> row;
        for (auto tok : split(line)) row.push_back(parse_double(tok, where));
        if (!rows.empty() && row.size() != rows.front().size())
            throw InvalidArgument(where + ": expected " + std::to_string(rows.front().size()) + " columns, found " +
                                  std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidArgument(name + ": no data");
    Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) M(r, c) = rows[r][c];
    return M;
}

inline Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument(path + ": cannot open");
    return read_matrix(in, path);
}

// A vector may be stored as one row or as one column.
inline Vector read_vector_file(const std::string& path) {
    const Matrix M = read_matrix_file(path);
    if (M.rows() == 1) return M.row(0).transpose();
    if (M.cols() == 1) return M.col(0);
    throw InvalidArgument(path + ": expected a single row or column, found " + std::to_string(M.rows()) + "x" +
                          std::to_string(M.cols()));
}

inline void write_matrix(std::ostream& out, const Matrix& M) {
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            if (c) out << ',';
            out << format_double(M(r, c));
        }
        out << '\n';
    }
}

// Dense single row.
inline void write_vector(std::ostream& out, const Vector& v) { write_matrix(out, v.transpose()); }

inline void write_matrix_file(const std::string& path, const Matrix& M) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument(path + ": cannot open for writing");
    write_matrix(out, M);
}

inline void write_vector_file(const std::string& path, const Vector& v) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument(path + ": cannot open for writing");
    write_vector(out, v);
}

}  // namespace fvsr::csv
