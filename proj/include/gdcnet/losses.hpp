#pragma once

#include <algorithm>
#include <cmath>

#include "gdcnet/errors.hpp"
#include "gdcnet/tensor.hpp"

namespace gdcnet {

inline constexpr double kProbEps = 1e-7;  // clamp for log terms

// Mean binary cross-entropy; probabilities clamped to [eps, 1-eps].
inline double bce_loss(const Vec& probs, const Vec& labels) {
    if (probs.size() != labels.size()) throw ShapeError("bce_loss: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], kProbEps, 1.0 - kProbEps);
        acc += labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
    }
    return -acc / static_cast<double>(probs.size());
}

// L = L_bce + alpha * L_cont
inline double total_loss(double l_bce, double l_cont, double alpha) {
    if (alpha < 0.0) throw ConfigError("total_loss: alpha must be >= 0");
    return l_bce + alpha * l_cont;
}

}  // namespace gdcnet
