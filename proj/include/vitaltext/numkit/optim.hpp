#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vitaltext/errors.hpp"
#include "vitaltext/numkit/param_store.hpp"

namespace vitaltext::numkit {

// Plain SGD: p <- p - lr * grad, then gradients are zeroed.
// A non-finite gradient aborts the run, naming the offending slot.
inline void sgd_step(ParamStore& params, double lr) {
    for (std::size_t si = 0; si < params.slot_count(); ++si) {
        auto& slot = params.slot_at(si);
        if (!slot.grad.all_finite()) {
            throw TrainingError("non-finite gradient in slot '" + slot.name + "'");
        }
        double* p = slot.value.data();
        const double* g = slot.grad.data();
        for (std::size_t i = 0; i < slot.value.size(); ++i) p[i] -= lr * g[i];
    }
    params.zero_grads();
}

// Adam state, one moment pair per slot. Opt-in alternative to SGD.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t t = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;

    void init(const ParamStore& params) {
        t = 0;
        m.clear();
        v.clear();
        for (std::size_t si = 0; si < params.slot_count(); ++si) {
            const auto& slot = params.slot_at(si);
            m.emplace_back(slot.value.rows(), slot.value.cols());
            v.emplace_back(slot.value.rows(), slot.value.cols());
        }
    }
};

inline void adam_step(ParamStore& params, AdamState& state, double lr) {
    if (state.m.size() != params.slot_count()) state.init(params);
    ++state.t;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t si = 0; si < params.slot_count(); ++si) {
        auto& slot = params.slot_at(si);
        if (!slot.grad.all_finite()) {
            throw TrainingError("non-finite gradient in slot '" + slot.name + "'");
        }
        double* p = slot.value.data();
        const double* g = slot.grad.data();
        double* m = state.m[si].data();
        double* v = state.v[si].data();
        for (std::size_t i = 0; i < slot.value.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + state.eps);
        }
    }
    params.zero_grads();
}

}  // namespace vitaltext::numkit
