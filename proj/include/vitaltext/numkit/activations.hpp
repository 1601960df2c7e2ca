#pragma once

#include <cmath>

#include "vitaltext/numkit/matrix.hpp"

namespace vitaltext::numkit {

// Numerically stable logistic: never evaluates exp of a large positive value.
inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline double sigmoid_grad(double s) { return s * (1.0 - s); }

inline double tanh_grad(double t) { return 1.0 - t * t; }

inline Matrix sigmoid(const Matrix& x) {
    Matrix y = x;
    for (double& v : y.raw()) v = sigmoid(v);
    return y;
}

inline Matrix tanh(const Matrix& x) {
    Matrix y = x;
    for (double& v : y.raw()) v = std::tanh(v);
    return y;
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline Matrix relu(const Matrix& x) {
    Matrix y = x;
    for (double& v : y.raw()) v = relu(v);
    return y;
}

}  // namespace vitaltext::numkit
