#pragma once

// Dense row-major matrix/vector kernels used by every other layer.
// All reductions use a fixed loop order so repeated runs are bit-stable.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lf2w {

struct shape_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class Precision { f32, f64 };

template <typename T>
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, T fill = T(0))
        : rows_(rows), cols_(cols), d_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return d_.size(); }

    T& operator()(std::size_t r, std::size_t c) { return d_[r * cols_ + c]; }
    T operator()(std::size_t r, std::size_t c) const { return d_[r * cols_ + c]; }

    T* data() { return d_.data(); }
    const T* data() const { return d_.data(); }

    bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (T x : d_) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }

    void fill(T v) {
        for (auto& x : d_) x = v;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> d_;
};

template <typename T>
class Vec {
public:
    Vec() = default;
    explicit Vec(std::size_t len, T fill = T(0)) : d_(len, fill) {}
    Vec(std::initializer_list<T> init) : d_(init) {}

    std::size_t len() const { return d_.size(); }
    T& operator[](std::size_t i) { return d_[i]; }
    T operator[](std::size_t i) const { return d_[i]; }
    T* data() { return d_.data(); }
    const T* data() const { return d_.data(); }

    bool all_finite() const {
        for (T x : d_) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }

    void fill(T v) {
        for (auto& x : d_) x = v;
    }

private:
    std::vector<T> d_;
};

using Matrix = Mat<double>;
using Vector = Vec<double>;

namespace detail {
inline void require(bool ok, const std::string& msg) {
    if (!ok) throw shape_error(msg);
}
} // namespace detail

// ---- products ----

template <typename T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
    detail::require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Mat<T> out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T aik = a(i, k);
            if (aik == T(0)) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

template <typename T>
Vec<T> matvec(const Mat<T>& a, const Vec<T>& x) {
    detail::require(a.cols() == x.len(), "matvec: dimension mismatch");
    Vec<T> out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        T acc = T(0);
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
        out[i] = acc;
    }
    return out;
}

template <typename T>
Mat<T> transpose(const Mat<T>& a) {
    Mat<T> out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

template <typename T>
Mat<T> outer(const Vec<T>& u, const Vec<T>& v) {
    Mat<T> out(u.len(), v.len());
    for (std::size_t i = 0; i < u.len(); ++i)
        for (std::size_t j = 0; j < v.len(); ++j) out(i, j) = u[i] * v[j];
    return out;
}

template <typename T>
T dot(const Vec<T>& a, const Vec<T>& b) {
    detail::require(a.len() == b.len(), "dot: length mismatch");
    T acc = T(0);
    for (std::size_t i = 0; i < a.len(); ++i) acc += a[i] * b[i];
    return acc;
}

// ---- elementwise ----

template <typename T>
Mat<T> add(const Mat<T>& a, const Mat<T>& b) {
    detail::require(a.same_shape(b), "add: shape mismatch");
    Mat<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

template <typename T>
Mat<T> sub(const Mat<T>& a, const Mat<T>& b) {
    detail::require(a.same_shape(b), "sub: shape mismatch");
    Mat<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

template <typename T>
Vec<T> add(const Vec<T>& a, const Vec<T>& b) {
    detail::require(a.len() == b.len(), "add: length mismatch");
    Vec<T> out = a;
    for (std::size_t i = 0; i < out.len(); ++i) out[i] += b[i];
    return out;
}

template <typename T>
Vec<T> sub(const Vec<T>& a, const Vec<T>& b) {
    detail::require(a.len() == b.len(), "sub: length mismatch");
    Vec<T> out = a;
    for (std::size_t i = 0; i < out.len(); ++i) out[i] -= b[i];
    return out;
}

template <typename T>
Mat<T> hadamard(const Mat<T>& a, const Mat<T>& b) {
    detail::require(a.same_shape(b), "hadamard: shape mismatch");
    Mat<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
    return out;
}

template <typename T>
Vec<T> hadamard(const Vec<T>& a, const Vec<T>& b) {
    detail::require(a.len() == b.len(), "hadamard: length mismatch");
    Vec<T> out = a;
    for (std::size_t i = 0; i < out.len(); ++i) out[i] *= b[i];
    return out;
}

template <typename T>
Mat<T> scale(const Mat<T>& a, T s) {
    Mat<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= s;
    return out;
}

template <typename T>
Vec<T> scale(const Vec<T>& a, T s) {
    Vec<T> out = a;
    for (std::size_t i = 0; i < out.len(); ++i) out[i] *= s;
    return out;
}

// ---- nonlinearities ----

template <typename T>
T sigmoid_scalar(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

template <typename T>
Vec<T> sigmoid(const Vec<T>& x) {
    Vec<T> out(x.len());
    for (std::size_t i = 0; i < x.len(); ++i) out[i] = sigmoid_scalar(x[i]);
    return out;
}

template <typename T>
Vec<T> silu(const Vec<T>& x) {
    Vec<T> out(x.len());
    for (std::size_t i = 0; i < x.len(); ++i) out[i] = x[i] * sigmoid_scalar(x[i]);
    return out;
}

template <typename T>
T norm2(const Vec<T>& x) {
    T acc = T(0);
    for (std::size_t i = 0; i < x.len(); ++i) acc += x[i] * x[i];
    return std::sqrt(acc);
}

template <typename T>
Vec<T> l2_normalize(const Vec<T>& x, T eps) {
    const T n = norm2(x);
    const T denom = n < eps ? eps : n;
    return scale(x, T(1) / denom);
}

template <typename T>
Vec<T> rmsnorm(const Vec<T>& x, const Vec<T>& gain, T eps) {
    detail::require(x.len() == gain.len(), "rmsnorm: length mismatch");
    T ms = T(0);
    for (std::size_t i = 0; i < x.len(); ++i) ms += x[i] * x[i];
    ms /= static_cast<T>(x.len());
    const T inv = T(1) / std::sqrt(ms + eps);
    Vec<T> out(x.len());
    for (std::size_t i = 0; i < x.len(); ++i) out[i] = gain[i] * x[i] * inv;
    return out;
}

// Input packs [gate; value]; output is silu(gate) * value.
template <typename T>
Vec<T> swiglu(const Vec<T>& x) {
    detail::require(x.len() % 2 == 0, "swiglu: input length must be even");
    const std::size_t h = x.len() / 2;
    Vec<T> out(h);
    for (std::size_t i = 0; i < h; ++i) out[i] = x[i] * sigmoid_scalar(x[i]) * x[h + i];
    return out;
}

// ---- triangular / structural ----

// Solves l * X = b by forward substitution. l must be unit lower triangular;
// the strict upper triangle is ignored and the diagonal is taken as 1.
template <typename T>
Mat<T> unit_lower_solve(const Mat<T>& l, const Mat<T>& b) {
    detail::require(l.rows() == l.cols(), "unit_lower_solve: l must be square");
    detail::require(l.rows() == b.rows(), "unit_lower_solve: row count mismatch");
    Mat<T> x = b;
    for (std::size_t i = 0; i < l.rows(); ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            const T lik = l(i, k);
            if (lik == T(0)) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) x(i, j) -= lik * x(k, j);
        }
    }
    return x;
}

// Solves l^T * X = b (l unit lower triangular) by back substitution.
// This is the adjoint solve paired with unit_lower_solve.
template <typename T>
Mat<T> unit_lower_transpose_solve(const Mat<T>& l, const Mat<T>& b) {
    detail::require(l.rows() == l.cols(), "unit_lower_transpose_solve: l must be square");
    detail::require(l.rows() == b.rows(), "unit_lower_transpose_solve: row count mismatch");
    Mat<T> x = b;
    const std::size_t n = l.rows();
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) {
            const T lki = l(k, ii);
            if (lki == T(0)) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) x(ii, j) -= lki * x(k, j);
        }
    }
    return x;
}

template <typename T = double>
Mat<T> identity(std::size_t n) {
    Mat<T> out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = T(1);
    return out;
}

template <typename T>
Mat<T> diag(const Vec<T>& v) {
    Mat<T> out(v.len(), v.len());
    for (std::size_t i = 0; i < v.len(); ++i) out(i, i) = v[i];
    return out;
}

// Strict lower-triangular causal mask: ones below the diagonal, zero elsewhere.
template <typename T = double>
Mat<T> strict_lower_mask(std::size_t c) {
    Mat<T> out(c, c);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < i; ++j) out(i, j) = T(1);
    return out;
}

// Causal mask including the diagonal (token attends to itself).
template <typename T = double>
Mat<T> lower_mask_incl(std::size_t c) {
    Mat<T> out(c, c);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j <= i; ++j) out(i, j) = T(1);
    return out;
}

template <typename T>
T frobenius_norm(const Mat<T>& a) {
    T acc = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * a.data()[i];
    return std::sqrt(acc);
}

template <typename T>
T max_abs(const Mat<T>& a) {
    T m = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
    return m;
}

template <typename T>
T max_abs(const Vec<T>& a) {
    T m = T(0);
    for (std::size_t i = 0; i < a.len(); ++i) m = std::max(m, std::abs(a[i]));
    return m;
}

template <typename T>
T max_abs_diff(const Mat<T>& a, const Mat<T>& b) {
    detail::require(a.same_shape(b), "max_abs_diff: shape mismatch");
    T m = T(0);
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

template <typename T>
T max_abs_diff(const Vec<T>& a, const Vec<T>& b) {
    detail::require(a.len() == b.len(), "max_abs_diff: length mismatch");
    T m = T(0);
    for (std::size_t i = 0; i < a.len(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace lf2w
