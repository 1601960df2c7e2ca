#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vitaltext/errors.hpp"

namespace vitaltext::numkit {

// Clamp keeps log() away from 0 without visibly biasing losses.
inline constexpr double kBceEps = 1e-12;

inline double binary_cross_entropy(double y_hat, double y) {
    if (y != 0.0 && y != 1.0) {
        throw DomainError("binary_cross_entropy: label must be 0 or 1, got " + std::to_string(y));
    }
    double p = std::clamp(y_hat, kBceEps, 1.0 - kBceEps);
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

// d loss / d y_hat for the clamped BCE above.
inline double binary_cross_entropy_grad(double y_hat, double y) {
    double p = std::clamp(y_hat, kBceEps, 1.0 - kBceEps);
    return (p - y) / (p * (1.0 - p));
}

// -log softmax(logits)[target], max-subtracted for stability.
inline double softmax_cross_entropy(const double* logits, std::size_t n, std::size_t target) {
    if (target >= n) {
        throw DomainError("softmax_cross_entropy: target " + std::to_string(target) +
                          " out of range for " + std::to_string(n) + " logits");
    }
    double mx = logits[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::exp(logits[i] - mx);
    return std::log(sum) - (logits[target] - mx);
}

inline double softmax_cross_entropy(const std::vector<double>& logits, std::size_t target) {
    return softmax_cross_entropy(logits.data(), logits.size(), target);
}

// Row softmax, max-subtracted.
inline void softmax(const double* logits, std::size_t n, double* probs_out) {
    double mx = logits[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        probs_out[i] = std::exp(logits[i] - mx);
        sum += probs_out[i];
    }
    for (std::size_t i = 0; i < n; ++i) probs_out[i] /= sum;
}

// Softmax probabilities plus the loss, for callers that also need the
// gradient (d loss / d logit_i = p_i - [i == target]).
inline double softmax_cross_entropy_probs(const double* logits, std::size_t n,
                                          std::size_t target, double* probs_out) {
    if (target >= n) {
        throw DomainError("softmax_cross_entropy: target " + std::to_string(target) +
                          " out of range for " + std::to_string(n) + " logits");
    }
    double mx = logits[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        probs_out[i] = std::exp(logits[i] - mx);
        sum += probs_out[i];
    }
    for (std::size_t i = 0; i < n; ++i) probs_out[i] /= sum;
    return std::log(sum) - (logits[target] - mx);
}

}  // namespace vitaltext::numkit
