#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "swstab/error.hpp"

namespace swstab {

using Vector = std::vector<double>;

/// Row-major dense matrix of finite doubles, sized for the tiny problems in
/// this library (N, n up to a few hundred).
class DenseMatrix {
public:
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0) {
            throw Error(ErrorKind::InvalidArgument, "matrix dimensions must be positive");
        }
        if (!std::isfinite(fill)) {
            throw Error(ErrorKind::NonFinite, "matrix fill value is not finite");
        }
    }

    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
        : DenseMatrix(from_rows(std::vector<std::vector<double>>(rows.begin(), rows.end()))) {}

    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty() || rows.front().empty()) {
            throw Error(ErrorKind::InvalidArgument, "matrix must have at least one entry");
        }
        DenseMatrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_) {
                throw Error(ErrorKind::DimensionMismatch, "ragged matrix rows", i);
            }
            for (std::size_t j = 0; j < m.cols_; ++j) {
                if (!std::isfinite(rows[i][j])) {
                    throw Error(ErrorKind::NonFinite, "matrix entry is not finite", i, j);
                }
                m(i, j) = rows[i][j];
            }
        }
        return m;
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static DenseMatrix diagonal(std::span<const double> d) {
        DenseMatrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    static DenseMatrix column(std::span<const double> v) {
        DenseMatrix m(v.size(), 1);
        for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> data() const noexcept { return data_; }

    std::vector<std::vector<double>> to_rows() const {
        std::vector<std::vector<double>> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
        return out;
    }

    DenseMatrix transpose() const {
        DenseMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double x : data_) s += x * x;
        return std::sqrt(s);
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : data_) m = std::max(m, std::abs(x));
        return m;
    }

    DenseMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        if (r0 + nr > rows_ || c0 + nc > cols_) {
            throw Error(ErrorKind::DimensionMismatch, "block out of range");
        }
        DenseMatrix b(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
        return b;
    }

    void set_block(std::size_t r0, std::size_t c0, const DenseMatrix& b) {
        if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_) {
            throw Error(ErrorKind::DimensionMismatch, "block out of range");
        }
        for (std::size_t i = 0; i < b.rows_; ++i)
            for (std::size_t j = 0; j < b.cols_; ++j) (*this)(r0 + i, c0 + j) = b(i, j);
    }

    DenseMatrix& operator+=(const DenseMatrix& o) {
        require_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    DenseMatrix& operator-=(const DenseMatrix& o) {
        require_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    DenseMatrix& operator*=(double s) {
        for (double& x : data_) x *= s;
        return *this;
    }

    friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
    friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
    friend DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }
    friend DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }
    friend DenseMatrix operator-(DenseMatrix a) { return a *= -1.0; }

    friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
        if (a.cols_ != b.rows_) {
            throw Error(ErrorKind::DimensionMismatch,
                        "cannot multiply " + a.shape() + " by " + b.shape());
        }
        DenseMatrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend Vector operator*(const DenseMatrix& a, std::span<const double> x) {
        if (a.cols_ != x.size()) {
            throw Error(ErrorKind::DimensionMismatch, "matrix-vector size mismatch");
        }
        Vector y(a.rows_, 0.0);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }
    friend Vector operator*(const DenseMatrix& a, const Vector& x) {
        return a * std::span<const double>(x);
    }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

    std::string shape() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

private:
    void require_same_shape(const DenseMatrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) {
            throw Error(ErrorKind::DimensionMismatch, "shape " + shape() + " vs " + o.shape());
        }
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

inline double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Every entry strictly greater than rel * ||v||_inf (the library's "v >> 0").
inline bool strictly_positive(std::span<const double> v, double rel) {
    const double floor = rel * norm_inf(v);
    if (v.empty() || norm_inf(v) == 0.0) return false;
    return std::all_of(v.begin(), v.end(), [floor](double x) { return x > floor; });
}

inline bool strictly_negative(std::span<const double> v, double rel) {
    const double floor = rel * norm_inf(v);
    if (v.empty() || norm_inf(v) == 0.0) return false;
    return std::all_of(v.begin(), v.end(), [floor](double x) { return x < -floor; });
}

} // namespace swstab
