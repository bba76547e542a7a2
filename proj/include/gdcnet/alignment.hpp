#pragma once

#include <vector>

#include "gdcnet/errors.hpp"
#include "gdcnet/tensor.hpp"

namespace gdcnet {

struct SimilarityMatrix {
    Mat scores;  // B x B, scores(i,j) = cos(z_v[i], z_t[j])
    std::size_t batch_size = 0;
};

inline SimilarityMatrix similarity_matrix(const std::vector<Vec>& z_v,
                                          const std::vector<Vec>& z_t) {
    if (z_v.size() != z_t.size()) throw ShapeError("similarity_matrix: batch length mismatch");
    const std::size_t b = z_v.size();
    if (b < 2) throw ShapeError("similarity_matrix: batch size must be >= 2");
    SimilarityMatrix s;
    s.batch_size = b;
    s.scores = Mat(b, b);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j) s.scores(i, j) = cosine(z_v[i], z_t[j]);
    return s;
}

// Margin hinge over image-anchored negatives, normalized by 1/B:
//   (1/B) sum_i sum_{j!=i} max(0, m + s_ij - s_ii)
// The symmetric (text-anchored) term is off by default; it is a config
// extension, not part of the printed objective.
inline double contrastive_loss(const SimilarityMatrix& s, double margin,
                               bool symmetric = false) {
    if (margin <= 0.0) throw ConfigError("contrastive_loss: margin must be positive");
    const std::size_t b = s.batch_size;
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            loss += std::max(0.0, margin + s.scores(i, j) - s.scores(i, i));
            if (symmetric) loss += std::max(0.0, margin + s.scores(j, i) - s.scores(i, i));
        }
    }
    return loss / static_cast<double>(b);
}

// dL/dS for the loss above, hinge subgradient 0 at the boundary.
inline Mat contrastive_loss_grad(const SimilarityMatrix& s, double margin,
                                 bool symmetric = false) {
    if (margin <= 0.0) throw ConfigError("contrastive_loss_grad: margin must be positive");
    const std::size_t b = s.batch_size;
    const double w = 1.0 / static_cast<double>(b);
    Mat g(b, b);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            if (margin + s.scores(i, j) - s.scores(i, i) > 0.0) {
                g(i, j) += w;
                g(i, i) -= w;
            }
            if (symmetric && margin + s.scores(j, i) - s.scores(i, i) > 0.0) {
                g(j, i) += w;
                g(i, i) -= w;
            }
        }
    }
    return g;
}

}  // namespace gdcnet
