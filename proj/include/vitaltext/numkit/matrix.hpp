#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "vitaltext/errors.hpp"

namespace vitaltext::numkit {

// Dense row-major matrix of 64-bit floats. The whole toolkit runs in double
// precision so finite-difference gradient checks are trustworthy.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from(std::initializer_list<std::initializer_list<double>> rows) {
        std::size_t r = rows.size();
        std::size_t c = r == 0 ? 0 : rows.begin()->size();
        Matrix m(r, c);
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != c) {
                throw DimensionError("Matrix::from: ragged initializer (row " +
                                     std::to_string(i) + " has " +
                                     std::to_string(row.size()) + " cols, expected " +
                                     std::to_string(c) + ")");
            }
            std::size_t j = 0;
            for (double v : row) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    void fill(double v) { data_.assign(data_.size(), v); }
    void zero() { fill(0.0); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    void check_finite(const std::string& what) const {
        if (!all_finite()) throw DomainError(what + ": non-finite value in " + shape_str() + " matrix");
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

inline void check_same_shape(const Matrix& a, const Matrix& b, const std::string& op) {
    if (!a.same_shape(b)) {
        throw DimensionError(op + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
}

// C = A * B  (A: n x k, B: k x m)
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions disagree " + a.shape_str() +
                             " vs " + b.shape_str());
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// y = x * W^T + b, the affine map used by every layer.
//   x: n x in, W: out x in, b: 1 x out (broadcast over rows).
inline Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
    if (x.cols() != w.cols()) {
        throw DimensionError("affine: input dim " + x.shape_str() +
                             " does not match weight " + w.shape_str());
    }
    if (b.rows() != 1 || b.cols() != w.rows()) {
        throw DimensionError("affine: bias " + b.shape_str() + " does not match weight " +
                             w.shape_str());
    }
    Matrix y(x.rows(), w.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xrow = x.row(i);
        double* yrow = y.row(i);
        for (std::size_t o = 0; o < w.rows(); ++o) {
            const double* wrow = w.row(o);
            double acc = 0.0;
            for (std::size_t k = 0; k < x.cols(); ++k) acc += xrow[k] * wrow[k];
            yrow[o] = acc + b(0, o);
        }
    }
    return y;
}

// Backward of affine: accumulates dW += dy^T x, db += column-sums(dy),
// and optionally dx += dy W. Gradients are accumulated, not overwritten,
// so a parameter shared across time steps sums its contributions.
inline void affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy,
                            Matrix& dw, Matrix& db, Matrix* dx = nullptr) {
    if (dy.rows() != x.rows() || dy.cols() != w.rows()) {
        throw DimensionError("affine_backward: dy " + dy.shape_str() + " vs x " +
                             x.shape_str() + ", W " + w.shape_str());
    }
    check_same_shape(dw, w, "affine_backward dW");
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xrow = x.row(i);
        const double* dyrow = dy.row(i);
        for (std::size_t o = 0; o < w.rows(); ++o) {
            const double g = dyrow[o];
            if (g == 0.0) continue;
            double* dwrow = dw.row(o);
            for (std::size_t k = 0; k < x.cols(); ++k) dwrow[k] += g * xrow[k];
            db(0, o) += g;
        }
        if (dx) {
            double* dxrow = dx->row(i);
            for (std::size_t o = 0; o < w.rows(); ++o) {
                const double g = dyrow[o];
                if (g == 0.0) continue;
                const double* wrow = w.row(o);
                for (std::size_t k = 0; k < x.cols(); ++k) dxrow[k] += g * wrow[k];
            }
        }
    }
}

inline void add_inplace(Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "add");
    double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

inline void scale_inplace(Matrix& a, double s) {
    for (double& v : a.raw()) v *= s;
}

// a += s * b
inline void axpy(Matrix& a, double s, const Matrix& b) {
    check_same_shape(a, b, "axpy");
    double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] += s * pb[i];
}

// column sums of dy accumulated into db (1 x cols)
inline void colsum_into(const Matrix& dy, Matrix& db) {
    if (db.rows() != 1 || db.cols() != dy.cols()) {
        throw DimensionError("colsum: db " + db.shape_str() + " vs dy " + dy.shape_str());
    }
    for (std::size_t i = 0; i < dy.rows(); ++i) {
        const double* r = dy.row(i);
        for (std::size_t j = 0; j < dy.cols(); ++j) db(0, j) += r[j];
    }
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline Matrix hconcat(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("hconcat: row counts differ " + a.shape_str() + " vs " +
                             b.shape_str());
    }
    Matrix c(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
        for (std::size_t j = 0; j < b.cols(); ++j) c(i, a.cols() + j) = b(i, j);
    }
    return c;
}

}  // namespace vitaltext::numkit
