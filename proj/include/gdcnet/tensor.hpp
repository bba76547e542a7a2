#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gdcnet/errors.hpp"

namespace gdcnet {

using Vec = std::vector<double>;

// Dense row-major matrix. Small enough at desk scale that hand-rolled
// loops beat pulling in a linear-algebra dependency.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline Vec matvec(const Mat& m, const Vec& x) {
    if (x.size() != m.cols) throw ShapeError("matvec: dimension mismatch");
    Vec y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        const double* row = &m.data[i * m.cols];
        for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

// y += m^T * x
inline void matvec_transpose_add(const Mat& m, const Vec& x, Vec& y) {
    if (x.size() != m.rows || y.size() != m.cols) throw ShapeError("matvec_transpose_add: dimension mismatch");
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = &m.data[i * m.cols];
        for (std::size_t j = 0; j < m.cols; ++j) y[j] += xi * row[j];
    }
}

// grad += outer(dy, x)
inline void outer_add(Mat& grad, const Vec& dy, const Vec& x) {
    if (dy.size() != grad.rows || x.size() != grad.cols) throw ShapeError("outer_add: dimension mismatch");
    for (std::size_t i = 0; i < grad.rows; ++i) {
        const double d = dy[i];
        if (d == 0.0) continue;
        double* row = &grad.data[i * grad.cols];
        for (std::size_t j = 0; j < grad.cols; ++j) row[j] += d * x[j];
    }
}

inline void add_inplace(Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw ShapeError("add_inplace: length mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

// Cosine with the zero-vector guard: either operand of zero norm yields 0.
inline double cosine(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    // rounding can push |cos| a few ulp past 1; clamp so downstream
    // range contracts ([0,2], [-1,1]) hold exactly
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// d cos(a,b)/da accumulated into da (scaled by w); zero-norm operands get zero gradient.
inline void cosine_grad_a(const Vec& a, const Vec& b, double w, Vec& da) {
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0) return;
    const double c = dot(a, b) / (na * nb);
    const double inv = 1.0 / (na * nb);
    const double inv_na2 = 1.0 / (na * na);
    for (std::size_t i = 0; i < a.size(); ++i) {
        da[i] += w * (b[i] * inv - c * a[i] * inv_na2);
    }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace gdcnet
