#ifndef GPMRT_SMALLMAT_HPP
#define GPMRT_SMALLMAT_HPP

#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace gpmrt {

// Dense row-major matrix for the small (q <= 9) systems used throughout.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}
    Mat(std::size_t rows, std::size_t cols, std::initializer_list<double> vals)
        : rows_(rows), cols_(cols), a_(vals) {
        assert(a_.size() == rows * cols);
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    const double* data() const { return a_.data(); }
    double* data() { return a_.data(); }

    Mat operator*(const Mat& o) const {
        assert(cols_ == o.rows_);
        Mat r(rows_, o.cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = 0; k < cols_; ++k) {
                const double aik = (*this)(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < o.cols_; ++j) r(i, j) += aik * o(k, j);
            }
        return r;
    }

    Mat operator+(const Mat& o) const {
        assert(rows_ == o.rows_ && cols_ == o.cols_);
        Mat r = *this;
        for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
        return r;
    }

    Mat operator-(const Mat& o) const {
        assert(rows_ == o.rows_ && cols_ == o.cols_);
        Mat r = *this;
        for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] -= o.a_[i];
        return r;
    }

    Mat scaled(double s) const {
        Mat r = *this;
        for (double& v : r.a_) v *= s;
        return r;
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        assert(x.size() == cols_);
        std::vector<double> y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

// LU with partial pivoting; returns {inverse, determinant}.
// Throws std::runtime_error on (numerical) singularity.
inline std::pair<Mat, double> lu_invert(const Mat& m) {
    const std::size_t n = m.rows();
    assert(n == m.cols());
    Mat lu = m;
    Mat inv = Mat::identity(n);
    std::vector<std::size_t> piv(n);
    double det = 1.0;
    for (std::size_t i = 0; i < n; ++i) piv[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(lu(k, j), lu(p, j));
                std::swap(inv(k, j), inv(p, j));
            }
            det = -det;
        }
        const double pivot = lu(k, k);
        if (std::abs(pivot) < 1e-300)
            throw std::runtime_error("lu_invert: singular matrix");
        det *= pivot;
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) / pivot;
            lu(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
            for (std::size_t j = 0; j < n; ++j) inv(i, j) -= f * inv(k, j);
        }
    }
    // back substitution on each column of inv
    for (std::size_t jcol = 0; jcol < n; ++jcol) {
        for (std::size_t k = n; k-- > 0;) {
            double s = inv(k, jcol);
            for (std::size_t j = k + 1; j < n; ++j) s -= lu(k, j) * inv(j, jcol);
            inv(k, jcol) = s / lu(k, k);
        }
    }
    return {inv, det};
}

inline double determinant(const Mat& m) {
    const std::size_t n = m.rows();
    Mat lu = m;
    double det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
            det = -det;
        }
        if (lu(k, k) == 0.0) return 0.0;
        det *= lu(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) / lu(k, k);
            for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
        }
    }
    return det;
}

}  // namespace gpmrt

#endif
