#pragma once

// Small dense row-major matrices and vectors, plus the two text formats
// matrices are exchanged in (CSV, and "rows cols" followed by values).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "phimc/csv.hpp"
#include "phimc/errors.hpp"

namespace phimc {

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return {};
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_) throw ConfigError("ragged matrix rows");
            std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * m.cols_));
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Vector multiply(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw NumericError("matrix-vector dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline double dot(const Vector& x, const Vector& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vector& x) { return std::sqrt(dot(x, x)); }

inline double max_abs(const Vector& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

/// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline Vector subtract(const Vector& x, const Vector& y) {
    Vector z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - y[i];
    return z;
}

inline bool all_finite(const Vector& x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

inline bool is_symmetric(const Matrix& a, double tol = 1e-12) {
    if (a.rows() != a.cols()) return false;
    const double scale = std::max(1.0, a.max_abs());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol * scale) return false;
    return true;
}

/// Positivity probe: every pivot of an unpivoted Cholesky factorization is > 0.
inline bool cholesky_pivots_positive(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) return false;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return true;
}

inline bool is_spd(const Matrix& a) { return is_symmetric(a) && cholesky_pivots_positive(a); }

namespace io {

inline double parse_number(const std::string& token, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &used);
    } catch (const std::exception&) {
        throw ConfigError(where + ": non-numeric value '" + token + "'");
    }
    while (used < token.size() && std::isspace(static_cast<unsigned char>(token[used]))) ++used;
    if (used != token.size()) throw ConfigError(where + ": non-numeric value '" + token + "'");
    if (!std::isfinite(v)) throw ConfigError(where + ": non-finite value '" + token + "'");
    return v;
}

/// "rows cols" on the first line, then rows*cols whitespace-separated values.
inline Matrix parse_dense(const std::string& text) {
    std::istringstream in(text);
    long long rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows <= 0 || cols <= 0) throw ConfigError("dense matrix: bad 'rows cols' header");
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    std::string tok;
    for (long long i = 0; i < rows; ++i)
        for (long long j = 0; j < cols; ++j) {
            if (!(in >> tok)) throw ConfigError("dense matrix: too few values");
            m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = parse_number(tok, "dense matrix");
        }
    if (in >> tok) throw ConfigError("dense matrix: trailing values");
    return m;
}

inline Matrix parse_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : csv::parse(text)) {
        std::vector<double> vals;
        for (const auto& f : r) vals.push_back(parse_number(f, "csv matrix"));
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw ConfigError("csv matrix: empty");
    return Matrix::from_rows(rows);
}

/// Picks the format from the first line: two whitespace-separated integers
/// mean a "rows cols" header, anything else is CSV.
inline Matrix parse_matrix(const std::string& text) {
    std::istringstream first(text.substr(0, text.find_first_of("\r\n")));
    std::string a, b, extra;
    auto is_count = [](const std::string& t) {
        return !t.empty() && std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); });
    };
    if (first >> a >> b && !(first >> extra) && is_count(a) && is_count(b)) return parse_dense(text);
    return parse_csv(text);
}

inline Matrix load_matrix(const std::string& path) { return parse_matrix(csv::read_file(path)); }

inline std::string format_dense(const Matrix& m) {
    std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += ' ';
            out += csv::number(m(i, j), 17);
        }
        out += '\n';
    }
    return out;
}

/// A vector file is a matrix with a single row or a single column.
inline Vector load_vector(const std::string& path) {
    const Matrix m = load_matrix(path);
    if (m.rows() != 1 && m.cols() != 1) throw ConfigError("vector file must have one row or one column");
    return m.data();
}

}  // namespace io
}  // namespace phimc
