#pragma once

#include <string>
#include <vector>

#include "vitaltext/errors.hpp"
#include "vitaltext/numkit/activations.hpp"
#include "vitaltext/numkit/matrix.hpp"
#include "vitaltext/numkit/param_store.hpp"
#include "vitaltext/numkit/rng.hpp"

namespace vitaltext::models {

using numkit::Matrix;
using numkit::ParamStore;

struct LstmSpec {
    std::size_t input = 0;
    std::size_t hidden = 0;
};

inline constexpr double kForgetBias = 1.0;

// Gate weights per gate g: W_xg, W_hg, peephole vector w_cg (diagonal,
// elementwise on the cell), bias b_g; cell candidate has no peephole.
// Peepholes start at zero, forget bias at +1 so early training keeps memory.
inline void lstm_init_params(ParamStore& ps, const std::string& prefix, const LstmSpec& spec,
                             numkit::Rng& rng) {
    const std::size_t L = spec.input, H = spec.hidden;
    for (const char* g : {"i", "f", "c", "o"}) {
        numkit::fill_glorot(ps.create(prefix + ".W_x" + g, H, L), rng);
        numkit::fill_glorot(ps.create(prefix + ".W_h" + g, H, H), rng);
        Matrix& b = ps.create(prefix + ".b_" + g, 1, H);
        if (g[0] == 'f') b.fill(kForgetBias);
    }
    for (const char* g : {"i", "f", "o"}) ps.create(prefix + ".w_c" + g, 1, H);
}

// Everything the backward pass needs, stored per time step (matrices are
// batch x hidden; xs entries are batch x input).
struct LstmCache {
    std::size_t T = 0, B = 0, H = 0;
    std::vector<Matrix> x, i, f, g, o, c, tanh_c, h;
    const Matrix& h_last() const { return h.back(); }
};

namespace detail {

// y += x * W^T
inline void add_mul_wt(const Matrix& x, const Matrix& w, Matrix& y) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* xrow = x.row(r);
        double* yrow = y.row(r);
        for (std::size_t o = 0; o < w.rows(); ++o) {
            const double* wrow = w.row(o);
            double acc = 0.0;
            for (std::size_t k = 0; k < x.cols(); ++k) acc += xrow[k] * wrow[k];
            yrow[o] += acc;
        }
    }
}

// dW += dy^T * x
inline void acc_weight_grad(const Matrix& x, const Matrix& dy, Matrix& dw) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* xrow = x.row(r);
        const double* dyrow = dy.row(r);
        for (std::size_t o = 0; o < dw.rows(); ++o) {
            const double g = dyrow[o];
            if (g == 0.0) continue;
            double* dwrow = dw.row(o);
            for (std::size_t k = 0; k < x.cols(); ++k) dwrow[k] += g * xrow[k];
        }
    }
}

// dx += dy * W
inline void acc_input_grad(const Matrix& dy, const Matrix& w, Matrix& dx) {
    for (std::size_t r = 0; r < dy.rows(); ++r) {
        const double* dyrow = dy.row(r);
        double* dxrow = dx.row(r);
        for (std::size_t o = 0; o < w.rows(); ++o) {
            const double g = dyrow[o];
            if (g == 0.0) continue;
            const double* wrow = w.row(o);
            for (std::size_t k = 0; k < w.cols(); ++k) dxrow[k] += g * wrow[k];
        }
    }
}

// y += row_vector broadcast over rows (bias or peephole ⊙ state handled by caller)
inline void add_row_broadcast(Matrix& y, const Matrix& v) {
    for (std::size_t r = 0; r < y.rows(); ++r) {
        double* yrow = y.row(r);
        const double* vrow = v.row(0);
        for (std::size_t j = 0; j < y.cols(); ++j) yrow[j] += vrow[j];
    }
}

// y += state ⊙ peephole (peephole is 1 x H, state is B x H)
inline void add_peephole(Matrix& y, const Matrix& state, const Matrix& peep) {
    for (std::size_t r = 0; r < y.rows(); ++r) {
        double* yrow = y.row(r);
        const double* srow = state.row(r);
        const double* p = peep.row(0);
        for (std::size_t j = 0; j < y.cols(); ++j) yrow[j] += srow[j] * p[j];
    }
}

}  // namespace detail

// Peephole recurrence, batch-major per step:
//   i_t = σ(W_xi x_t + W_hi h_{t-1} + w_ci ⊙ c_{t-1} + b_i)
//   f_t = σ(W_xf x_t + W_hf h_{t-1} + w_cf ⊙ c_{t-1} + b_f)
//   c_t = f_t ⊙ c_{t-1} + i_t ⊙ tanh(W_xc x_t + W_hc h_{t-1} + b_c)
//   o_t = σ(W_xo x_t + W_ho h_{t-1} + w_co ⊙ c_t + b_o)   (reads the updated cell)
//   h_t = o_t ⊙ tanh(c_t),  h_0 = c_0 = 0
inline LstmCache lstm_forward(const std::vector<Matrix>& xs, const ParamStore& ps,
                              const std::string& prefix) {
    if (xs.empty()) throw DomainError("lstm_forward: empty sequence");
    const std::size_t T = xs.size();
    const std::size_t B = xs[0].rows();
    const Matrix& W_xi = ps.param(prefix + ".W_xi");
    const std::size_t H = W_xi.rows();

    LstmCache cache;
    cache.T = T;
    cache.B = B;
    cache.H = H;
    cache.x = xs;
    cache.i.reserve(T);
    cache.f.reserve(T);
    cache.g.reserve(T);
    cache.o.reserve(T);
    cache.c.reserve(T);
    cache.tanh_c.reserve(T);
    cache.h.reserve(T);

    Matrix h_prev(B, H), c_prev(B, H);
    for (std::size_t t = 0; t < T; ++t) {
        const Matrix& x = xs[t];
        if (x.rows() != B) throw DimensionError("lstm_forward: ragged batch at step " + std::to_string(t));

        Matrix ai(B, H), af(B, H), ag(B, H), ao(B, H);
        detail::add_mul_wt(x, ps.param(prefix + ".W_xi"), ai);
        detail::add_mul_wt(h_prev, ps.param(prefix + ".W_hi"), ai);
        detail::add_peephole(ai, c_prev, ps.param(prefix + ".w_ci"));
        detail::add_row_broadcast(ai, ps.param(prefix + ".b_i"));

        detail::add_mul_wt(x, ps.param(prefix + ".W_xf"), af);
        detail::add_mul_wt(h_prev, ps.param(prefix + ".W_hf"), af);
        detail::add_peephole(af, c_prev, ps.param(prefix + ".w_cf"));
        detail::add_row_broadcast(af, ps.param(prefix + ".b_f"));

        detail::add_mul_wt(x, ps.param(prefix + ".W_xc"), ag);
        detail::add_mul_wt(h_prev, ps.param(prefix + ".W_hc"), ag);
        detail::add_row_broadcast(ag, ps.param(prefix + ".b_c"));

        Matrix i = numkit::sigmoid(ai);
        Matrix f = numkit::sigmoid(af);
        Matrix g = numkit::tanh(ag);

        Matrix c(B, H);
        for (std::size_t k = 0; k < c.size(); ++k) {
            c.raw()[k] = f.raw()[k] * c_prev.raw()[k] + i.raw()[k] * g.raw()[k];
        }

        detail::add_mul_wt(x, ps.param(prefix + ".W_xo"), ao);
        detail::add_mul_wt(h_prev, ps.param(prefix + ".W_ho"), ao);
        detail::add_peephole(ao, c, ps.param(prefix + ".w_co"));
        detail::add_row_broadcast(ao, ps.param(prefix + ".b_o"));
        Matrix o = numkit::sigmoid(ao);

        Matrix tc = numkit::tanh(c);
        Matrix h(B, H);
        for (std::size_t k = 0; k < h.size(); ++k) h.raw()[k] = o.raw()[k] * tc.raw()[k];

        cache.i.push_back(std::move(i));
        cache.f.push_back(std::move(f));
        cache.g.push_back(std::move(g));
        cache.o.push_back(std::move(o));
        cache.c.push_back(c);
        cache.tanh_c.push_back(std::move(tc));
        cache.h.push_back(h);
        h_prev = std::move(h);
        c_prev = std::move(c);
    }
    return cache;
}

// One recurrence step for incremental decoding: updates h_prev/c_prev in place.
inline void lstm_step(const Matrix& x, Matrix& h_prev, Matrix& c_prev, const ParamStore& ps,
                      const std::string& prefix) {
    const std::size_t B = x.rows();
    const std::size_t H = ps.param(prefix + ".W_xi").rows();
    Matrix ai(B, H), af(B, H), ag(B, H), ao(B, H);
    detail::add_mul_wt(x, ps.param(prefix + ".W_xi"), ai);
    detail::add_mul_wt(h_prev, ps.param(prefix + ".W_hi"), ai);
    detail::add_peephole(ai, c_prev, ps.param(prefix + ".w_ci"));
    detail::add_row_broadcast(ai, ps.param(prefix + ".b_i"));
    detail::add_mul_wt(x, ps.param(prefix + ".W_xf"), af);
    detail::add_mul_wt(h_prev, ps.param(prefix + ".W_hf"), af);
    detail::add_peephole(af, c_prev, ps.param(prefix + ".w_cf"));
    detail::add_row_broadcast(af, ps.param(prefix + ".b_f"));
    detail::add_mul_wt(x, ps.param(prefix + ".W_xc"), ag);
    detail::add_mul_wt(h_prev, ps.param(prefix + ".W_hc"), ag);
    detail::add_row_broadcast(ag, ps.param(prefix + ".b_c"));
    Matrix i = numkit::sigmoid(ai), f = numkit::sigmoid(af), g = numkit::tanh(ag);
    Matrix c(B, H);
    for (std::size_t k = 0; k < c.size(); ++k)
        c.raw()[k] = f.raw()[k] * c_prev.raw()[k] + i.raw()[k] * g.raw()[k];
    detail::add_mul_wt(x, ps.param(prefix + ".W_xo"), ao);
    detail::add_mul_wt(h_prev, ps.param(prefix + ".W_ho"), ao);
    detail::add_peephole(ao, c, ps.param(prefix + ".w_co"));
    detail::add_row_broadcast(ao, ps.param(prefix + ".b_o"));
    Matrix o = numkit::sigmoid(ao);
    Matrix tc = numkit::tanh(c);
    for (std::size_t k = 0; k < tc.size(); ++k) h_prev.raw()[k] = o.raw()[k] * tc.raw()[k];
    c_prev = std::move(c);
}

// Single sequence x (T x input) -> T x H hidden states, batch size 1 inside.
inline Matrix lstm_forward_single(const Matrix& x, const ParamStore& ps, const std::string& prefix) {
    std::vector<Matrix> xs;
    xs.reserve(x.rows());
    for (std::size_t t = 0; t < x.rows(); ++t) {
        Matrix step(1, x.cols());
        for (std::size_t j = 0; j < x.cols(); ++j) step(0, j) = x(t, j);
        xs.push_back(std::move(step));
    }
    auto cache = lstm_forward(xs, ps, prefix);
    Matrix hs(cache.T, cache.H);
    for (std::size_t t = 0; t < cache.T; ++t)
        for (std::size_t j = 0; j < cache.H; ++j) hs(t, j) = cache.h[t](0, j);
    return hs;
}

// BPTT. dh holds the loss gradient on each h_t (zero matrices where the loss
// does not touch a step). Parameter gradients accumulate into ps; pass dx to
// also collect input gradients per step.
inline void lstm_backward(const LstmCache& cache, const std::vector<Matrix>& dh, ParamStore& ps,
                          const std::string& prefix, std::vector<Matrix>* dx = nullptr) {
    const std::size_t T = cache.T, B = cache.B, H = cache.H;
    if (dh.size() != T) throw DimensionError("lstm_backward: dh length mismatch");

    const Matrix& w_ci = ps.param(prefix + ".w_ci");
    const Matrix& w_cf = ps.param(prefix + ".w_cf");
    const Matrix& w_co = ps.param(prefix + ".w_co");

    Matrix dc_acc(B, H), dh_acc(B, H);
    Matrix zero(B, H);

    for (std::size_t ti = T; ti-- > 0;) {
        const Matrix& c_prev = ti == 0 ? zero : cache.c[ti - 1];
        const Matrix& h_prev = ti == 0 ? zero : cache.h[ti - 1];
        const Matrix& i = cache.i[ti];
        const Matrix& f = cache.f[ti];
        const Matrix& g = cache.g[ti];
        const Matrix& o = cache.o[ti];
        const Matrix& tc = cache.tanh_c[ti];

        Matrix dh_total = dh[ti];
        add_inplace(dh_total, dh_acc);

        Matrix dao(B, H), dc_total(B, H);
        for (std::size_t k = 0; k < dao.size(); ++k) {
            const double dht = dh_total.raw()[k];
            const double ov = o.raw()[k];
            const double tcv = tc.raw()[k];
            // h = o ⊙ tanh(c): split into the o-gate preactivation and the cell
            dao.raw()[k] = dht * tcv * ov * (1.0 - ov);
            dc_total.raw()[k] = dc_acc.raw()[k] + dht * ov * (1.0 - tcv * tcv);
        }
        // o-gate peephole reads c_t, so dao feeds the cell gradient directly
        for (std::size_t r = 0; r < B; ++r) {
            double* dct = dc_total.row(r);
            const double* daor = dao.row(r);
            const double* p = w_co.row(0);
            for (std::size_t j = 0; j < H; ++j) dct[j] += daor[j] * p[j];
        }

        Matrix dai(B, H), daf(B, H), dag(B, H);
        for (std::size_t k = 0; k < dai.size(); ++k) {
            const double dct = dc_total.raw()[k];
            const double iv = i.raw()[k];
            const double fv = f.raw()[k];
            const double gv = g.raw()[k];
            dai.raw()[k] = dct * gv * iv * (1.0 - iv);
            daf.raw()[k] = dct * c_prev.raw()[k] * fv * (1.0 - fv);
            dag.raw()[k] = dct * iv * (1.0 - gv * gv);
        }

        // carry to t-1: through the forget product and both c_{t-1} peepholes
        for (std::size_t r = 0; r < B; ++r) {
            double* dca = dc_acc.row(r);
            const double* dct = dc_total.row(r);
            const double* fr = f.row(r);
            const double* dair = dai.row(r);
            const double* dafr = daf.row(r);
            const double* pi = w_ci.row(0);
            const double* pf = w_cf.row(0);
            for (std::size_t j = 0; j < H; ++j) {
                dca[j] = dct[j] * fr[j] + dair[j] * pi[j] + dafr[j] * pf[j];
            }
        }

        dh_acc.zero();
        detail::acc_input_grad(dai, ps.param(prefix + ".W_hi"), dh_acc);
        detail::acc_input_grad(daf, ps.param(prefix + ".W_hf"), dh_acc);
        detail::acc_input_grad(dag, ps.param(prefix + ".W_hc"), dh_acc);
        detail::acc_input_grad(dao, ps.param(prefix + ".W_ho"), dh_acc);

        const Matrix& x = cache.x[ti];
        struct GateGrad {
            const char* name;
            const Matrix* da;
        };
        for (const auto& [name, da] : {GateGrad{"i", &dai}, GateGrad{"f", &daf},
                                       GateGrad{"c", &dag}, GateGrad{"o", &dao}}) {
            detail::acc_weight_grad(x, *da, ps.grad(prefix + ".W_x" + name));
            detail::acc_weight_grad(h_prev, *da, ps.grad(prefix + ".W_h" + name));
            numkit::colsum_into(*da, ps.grad(prefix + ".b_" + name));
        }
        // peephole grads: dw_c* += Σ_batch da ⊙ state it read
        auto acc_peep = [&](const Matrix& da, const Matrix& state, Matrix& dw) {
            for (std::size_t r = 0; r < B; ++r) {
                const double* dar = da.row(r);
                const double* sr = state.row(r);
                double* d = dw.row(0);
                for (std::size_t j = 0; j < H; ++j) d[j] += dar[j] * sr[j];
            }
        };
        acc_peep(dai, c_prev, ps.grad(prefix + ".w_ci"));
        acc_peep(daf, c_prev, ps.grad(prefix + ".w_cf"));
        acc_peep(dao, cache.c[ti], ps.grad(prefix + ".w_co"));

        if (dx) {
            Matrix& dxt = (*dx)[ti];
            detail::acc_input_grad(dai, ps.param(prefix + ".W_xi"), dxt);
            detail::acc_input_grad(daf, ps.param(prefix + ".W_xf"), dxt);
            detail::acc_input_grad(dag, ps.param(prefix + ".W_xc"), dxt);
            detail::acc_input_grad(dao, ps.param(prefix + ".W_xo"), dxt);
        }
    }
}

}  // namespace vitaltext::models
