#pragma once

// Matrix Market / CSV readers for dense matrices and right-hand sides, and
// the shortest round-trip formatting used by every CSV writer.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "wsgd/errors.hpp"
#include "wsgd/numerics.hpp"

namespace wsgd::io {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

inline std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) {
        out.push_back(cur);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

/// Matrix Market `array` (column-major) or `coordinate` format, real or
/// integer field, general or symmetric.
inline DenseMatrix read_matrix_market(std::istream& is, const std::string& name = "<stream>")
{
    std::string line;
    if (!std::getline(is, line)) {
        throw IoError(name + ": empty file");
    }
    std::istringstream hs(lower(line));
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%matrixmarket" || object != "matrix") {
        throw IoError(name + ": missing %%MatrixMarket matrix header");
    }
    if (field != "real" && field != "integer" && field != "double") {
        throw IoError(name + ": unsupported field '" + field + "'");
    }
    const bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general") {
        throw IoError(name + ": unsupported symmetry '" + symmetry + "'");
    }
    do {
        if (!std::getline(is, line)) {
            throw IoError(name + ": missing size line");
        }
    } while (line.empty() || line[0] == '%');

    std::istringstream ss(line);
    long rows = 0;
    long cols = 0;
    if (!(ss >> rows >> cols) || rows < 1 || cols < 1) {
        throw IoError(name + ": bad size line '" + line + "'");
    }
    DenseMatrix A = DenseMatrix::Zero(rows, cols);
    auto next_value = [&](std::istringstream& ls, const std::string& raw) {
        std::string tok;
        if (!(ls >> tok)) {
            throw IoError(name + ": truncated entry '" + raw + "'");
        }
        const auto v = parse_double(tok);
        if (!v) {
            throw IoError(name + ": bad number '" + tok + "'");
        }
        return *v;
    };

    if (format == "array") {
        long count = 0;
        const long total = rows * cols;
        while (count < total && std::getline(is, line)) {
            if (line.empty() || line[0] == '%') {
                continue;
            }
            std::istringstream ls(line);
            const double v = next_value(ls, line);
            const long r = count % rows;
            const long c = count / rows;
            A(r, c) = v;
            if (symmetric) {
                A(c, r) = v;
            }
            ++count;
        }
        if (count != total) {
            throw IoError(name + ": expected " + std::to_string(total) + " entries, found "
                          + std::to_string(count));
        }
    } else if (format == "coordinate") {
        long nnz = 0;
        if (!(ss >> nnz) || nnz < 0) {
            throw IoError(name + ": coordinate size line needs an entry count");
        }
        long seen = 0;
        while (seen < nnz && std::getline(is, line)) {
            if (line.empty() || line[0] == '%') {
                continue;
            }
            std::istringstream ls(line);
            long r = 0;
            long c = 0;
            if (!(ls >> r >> c) || r < 1 || c < 1 || r > rows || c > cols) {
                throw IoError(name + ": bad coordinate entry '" + line + "'");
            }
            const double v = next_value(ls, line);
            A(r - 1, c - 1) = v;
            if (symmetric) {
                A(c - 1, r - 1) = v;
            }
            ++seen;
        }
        if (seen != nnz) {
            throw IoError(name + ": expected " + std::to_string(nnz) + " entries, found "
                          + std::to_string(seen));
        }
    } else {
        throw IoError(name + ": unsupported format '" + format + "'");
    }
    if (!A.allFinite()) {
        throw IoError(name + ": non-finite entries");
    }
    return A;
}

/// One matrix row per line, comma-separated. A first line that does not
/// parse as numbers is taken as the column header.
inline DenseMatrix read_csv_matrix(std::istream& is, const std::string& name = "<stream>")
{
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        std::vector<double> vals;
        bool ok = true;
        for (const auto& f : split(line, ',')) {
            const auto v = parse_double(f);
            if (!v) {
                ok = false;
                break;
            }
            vals.push_back(*v);
        }
        if (!ok) {
            if (rows.empty() && lineno == 1) {
                continue; // header
            }
            throw IoError(name + ":" + std::to_string(lineno) + ": cannot parse '" + line + "'");
        }
        if (!rows.empty() && vals.size() != rows.front().size()) {
            throw IoError(name + ":" + std::to_string(lineno) + ": expected "
                          + std::to_string(rows.front().size()) + " columns");
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty() || rows.front().empty()) {
        throw IoError(name + ": no data rows");
    }
    DenseMatrix A(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    if (!A.allFinite()) {
        throw IoError(name + ": non-finite entries");
    }
    return A;
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    return in;
}

inline bool looks_like_matrix_market(std::istream& is)
{
    const auto c = is.peek();
    return c == '%';
}

/// Matrix Market when the file starts with a banner, CSV otherwise.
inline DenseMatrix read_matrix(const std::string& path)
{
    auto in = open_input(path);
    if (looks_like_matrix_market(in)) {
        return read_matrix_market(in, path);
    }
    return read_csv_matrix(in, path);
}

/// One value per line (blank lines skipped), or a Matrix Market n x 1 array.
inline Vector read_vector(const std::string& path)
{
    auto in = open_input(path);
    if (looks_like_matrix_market(in)) {
        const DenseMatrix M = read_matrix_market(in, path);
        if (M.cols() != 1) {
            throw IoError(path + ": right-hand side must have one column");
        }
        return M.col(0);
    }
    std::vector<double> vals;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto v = parse_double(line);
        if (!v) {
            if (vals.empty() && lineno == 1) {
                continue; // header
            }
            throw IoError(path + ":" + std::to_string(lineno) + ": cannot parse '" + line + "'");
        }
        vals.push_back(*v);
    }
    if (vals.empty()) {
        throw IoError(path + ": no values");
    }
    Vector b(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) {
        b(static_cast<Eigen::Index>(i)) = vals[i];
    }
    if (!b.allFinite()) {
        throw IoError(path + ": non-finite entries");
    }
    return b;
}

inline void write_csv_matrix(std::ostream& os, const DenseMatrix& A)
{
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        os << (j ? "," : "") << "c" << j;
    }
    os << '\n';
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            os << (j ? "," : "") << format_double(A(i, j));
        }
        os << '\n';
    }
}

inline void write_vector(std::ostream& os, const Vector& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        os << format_double(v(i)) << '\n';
    }
}

} // namespace wsgd::io
