#pragma once

#include <string>

#include "vitaltext/numkit/activations.hpp"
#include "vitaltext/numkit/matrix.hpp"
#include "vitaltext/numkit/param_store.hpp"
#include "vitaltext/numkit/rng.hpp"

namespace vitaltext::models {

using numkit::Matrix;
using numkit::ParamStore;

struct FusionSpec {
    std::size_t lstm_hidden = 256;  // H
    std::size_t emb_dim = 100;      // d (each of e_1, e_2)
    std::size_t text_hidden = 100;
    std::size_t joint_hidden = 300;
};

inline void fusion_init_params(ParamStore& ps, const std::string& prefix, const FusionSpec& spec,
                               numkit::Rng& rng) {
    numkit::fill_glorot(ps.create(prefix + ".W_e", spec.text_hidden, 2 * spec.emb_dim), rng);
    ps.create(prefix + ".b_e", 1, spec.text_hidden);
    numkit::fill_glorot(ps.create(prefix + ".W_j", spec.joint_hidden, spec.lstm_hidden + spec.text_hidden), rng);
    ps.create(prefix + ".b_j", 1, spec.joint_hidden);
    numkit::fill_glorot(ps.create(prefix + ".W_y", 1, spec.joint_hidden), rng);
    ps.create(prefix + ".b_y", 1, 1);
}

struct FusionCache {
    Matrix e;       // B x 2d, the concatenated [e_1, e_2]
    Matrix h_t;     // B x H
    Matrix h_e;     // B x text_hidden
    Matrix concat;  // B x (H + text_hidden), the [h_T, h_e] input to W_j
    Matrix h_j;     // B x joint_hidden
    Matrix prob;    // B x 1, ŷ
};

// h_e = W_e [e_1, e_2] + b_e;  h_j = W_j [h_T, h_e] + b_j;  ŷ = σ(W_y h_j + b_y).
// The hidden maps are linear, exactly as the layer equations are written.
inline FusionCache fusion_forward(const Matrix& h_t, const Matrix& e, const ParamStore& ps,
                                  const std::string& prefix) {
    FusionCache cache;
    cache.h_t = h_t;
    cache.e = e;
    cache.h_e = numkit::affine(e, ps.param(prefix + ".W_e"), ps.param(prefix + ".b_e"));
    cache.concat = numkit::hconcat(h_t, cache.h_e);
    cache.h_j = numkit::affine(cache.concat, ps.param(prefix + ".W_j"), ps.param(prefix + ".b_j"));
    Matrix logit = numkit::affine(cache.h_j, ps.param(prefix + ".W_y"), ps.param(prefix + ".b_y"));
    cache.prob = numkit::sigmoid(logit);
    return cache;
}

// dz is the gradient on the pre-sigmoid logit (for mean BCE: (ŷ - y)/B).
// Returns the gradient on h_T for the LSTM's BPTT.
inline Matrix fusion_backward(const FusionCache& cache, const Matrix& dz, ParamStore& ps,
                              const std::string& prefix) {
    Matrix dh_j(cache.h_j.rows(), cache.h_j.cols());
    numkit::affine_backward(cache.h_j, ps.param(prefix + ".W_y"), dz, ps.grad(prefix + ".W_y"),
                            ps.grad(prefix + ".b_y"), &dh_j);
    Matrix dconcat(cache.concat.rows(), cache.concat.cols());
    numkit::affine_backward(cache.concat, ps.param(prefix + ".W_j"), dh_j, ps.grad(prefix + ".W_j"),
                            ps.grad(prefix + ".b_j"), &dconcat);

    const std::size_t H = cache.h_t.cols();
    Matrix dh_t(dconcat.rows(), H);
    Matrix dh_e(dconcat.rows(), cache.h_e.cols());
    for (std::size_t r = 0; r < dconcat.rows(); ++r) {
        for (std::size_t j = 0; j < H; ++j) dh_t(r, j) = dconcat(r, j);
        for (std::size_t j = 0; j < dh_e.cols(); ++j) dh_e(r, j) = dconcat(r, H + j);
    }
    numkit::affine_backward(cache.e, ps.param(prefix + ".W_e"), dh_e, ps.grad(prefix + ".W_e"),
                            ps.grad(prefix + ".b_e"));
    return dh_t;
}

}  // namespace vitaltext::models
