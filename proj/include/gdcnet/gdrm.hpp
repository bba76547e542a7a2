#pragma once

#include <random>

#include "gdcnet/embedding.hpp"
#include "gdcnet/errors.hpp"
#include "gdcnet/sentiment.hpp"
#include "gdcnet/tensor.hpp"

namespace gdcnet {

// Cosine dissimilarity between projected text and caption embeddings.
// Zero-norm operands take the guard cosine 0, so d_sem = 1.
inline double semantic_discrepancy(const Vec& z_text, const Vec& z_caption) {
    return 1.0 - cosine(z_text, z_caption);
}

// Cosine similarity between projected image and caption embeddings.
// A lower value means the caption drifted from the image.
inline double fidelity(const Vec& z_image, const Vec& z_caption) {
    return cosine(z_image, z_caption);
}

struct DiscrepancyTriple {
    double d_sem = 0.0;       // [0, 2]
    double d_sen = 0.0;       // [0, 2]
    double d_fidelity = 0.0;  // [-1, 1]
};

inline DiscrepancyTriple discrepancy_vector(double d_sem, double d_sen, double d_fid) {
    const double eps = 1e-12;
    if (d_sem < -eps || d_sem > 2.0 + eps) throw DomainError("d_sem out of [0,2]");
    if (d_sen < -eps || d_sen > 2.0 + eps) throw DomainError("d_sen out of [0,2]");
    if (d_fid < -1.0 - eps || d_fid > 1.0 + eps) throw DomainError("d_fidelity out of [-1,1]");
    return DiscrepancyTriple{d_sem, d_sen, d_fid};
}

// 3 -> hidden -> d_f, rectifier on the hidden layer.
struct DiscrepancyMLP {
    Mat w1;  // hidden x 3
    Vec b1;
    Mat w2;  // d_f x hidden
    Vec b2;

    static DiscrepancyMLP init(std::size_t hidden, std::size_t d_f, std::mt19937_64& rng) {
        DiscrepancyMLP m;
        m.w1 = Mat(hidden, 3);
        m.b1 = Vec(hidden, 0.0);
        m.w2 = Mat(d_f, hidden);
        m.b2 = Vec(d_f, 0.0);
        const double bound1 = 1.0 / std::sqrt(3.0);
        const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
        std::uniform_real_distribution<double> u1(-bound1, bound1);
        std::uniform_real_distribution<double> u2(-bound2, bound2);
        for (double& w : m.w1.data) w = u1(rng);
        for (double& w : m.w2.data) w = u2(rng);
        return m;
    }
};

inline Vec discrepancy_representation(const DiscrepancyMLP& mlp, const DiscrepancyTriple& d) {
    const Vec input{d.d_sem, d.d_sen, d.d_fidelity};
    Vec a1 = matvec(mlp.w1, input);
    add_inplace(a1, mlp.b1);
    for (double& x : a1) x = std::max(0.0, x);
    Vec out = matvec(mlp.w2, a1);
    add_inplace(out, mlp.b2);
    return out;
}

}  // namespace gdcnet
