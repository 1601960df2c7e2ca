#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vitaltext/doc2vecc/model.hpp"
#include "vitaltext/errors.hpp"
#include "vitaltext/numkit/activations.hpp"
#include "vitaltext/numkit/rng.hpp"

namespace vitaltext::doc2vecc {

struct CorruptResult {
    std::vector<std::size_t> retained;  // positions into the document
    double scale = 1.0;                 // 1/(1-q), the unbiasedness factor
};

// Each token independently survives with probability 1-q.
inline CorruptResult corrupt(std::size_t doc_len, double q, numkit::Rng& rng) {
    if (q < 0.0 || q >= 1.0) throw ConfigError("corruption", "q must be in [0,1)");
    CorruptResult r;
    r.scale = 1.0 / (1.0 - q);
    r.retained.reserve(doc_len);
    for (std::size_t i = 0; i < doc_len; ++i) {
        if (q == 0.0 || rng.uniform() >= q) r.retained.push_back(i);
    }
    return r;
}

// Negative-sampling distribution: unigram counts raised to 3/4.
class UnigramTable {
  public:
    explicit UnigramTable(const corpus::Vocabulary& vocab) {
        cdf_.reserve(vocab.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            double c = static_cast<double>(std::max<std::int64_t>(vocab.count(i), 0));
            acc += std::pow(c, 0.75);
            cdf_.push_back(acc);
        }
        if (cdf_.empty() || acc <= 0.0) {
            throw ConfigError("vocabulary", "cannot build a sampling table from an empty vocabulary");
        }
        total_ = acc;
    }

    std::size_t sample(numkit::Rng& rng) const {
        double u = rng.uniform() * total_;
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return static_cast<std::size_t>(it - cdf_.begin());
    }

  private:
    std::vector<double> cdf_;
    double total_ = 0.0;
};

// One skip-gram pair with the corrupted-document context:
//   h = U[ctx] + scale/n · Σ_{r in retained} U[r]
//   L = -log σ(V[target]·h) - Σ_neg log σ(-V[neg]·h)
// retained holds vocabulary indices here; n is the full document length.
inline double pair_loss(const Matrix& u, const Matrix& v, std::size_t ctx, std::size_t target,
                        const std::vector<std::size_t>& negatives,
                        const std::vector<std::size_t>& retained, std::size_t doc_len, double q) {
    const std::size_t d = u.cols();
    const double doc_coef = retained.empty() ? 0.0 : (1.0 / (1.0 - q)) / static_cast<double>(doc_len);
    std::vector<double> h(u.row(ctx), u.row(ctx) + d);
    for (std::size_t r : retained) {
        const double* row = u.row(r);
        for (std::size_t j = 0; j < d; ++j) h[j] += doc_coef * row[j];
    }
    auto score = [&](std::size_t w) {
        const double* row = v.row(w);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += row[j] * h[j];
        return s;
    };
    double loss = -std::log(std::max(numkit::sigmoid(score(target)), 1e-12));
    for (std::size_t neg : negatives) {
        loss += -std::log(std::max(1.0 - numkit::sigmoid(score(neg)), 1e-12));
    }
    return loss;
}

// Analytic gradients of pair_loss, accumulated into du/dv (same shapes as u/v).
inline void pair_backward(const Matrix& u, const Matrix& v, std::size_t ctx, std::size_t target,
                          const std::vector<std::size_t>& negatives,
                          const std::vector<std::size_t>& retained, std::size_t doc_len, double q,
                          Matrix& du, Matrix& dv) {
    const std::size_t d = u.cols();
    const double doc_coef = retained.empty() ? 0.0 : (1.0 / (1.0 - q)) / static_cast<double>(doc_len);
    std::vector<double> h(u.row(ctx), u.row(ctx) + d);
    for (std::size_t r : retained) {
        const double* row = u.row(r);
        for (std::size_t j = 0; j < d; ++j) h[j] += doc_coef * row[j];
    }
    std::vector<double> dh(d, 0.0);
    auto output_grad = [&](std::size_t w, double label) {
        const double* vrow = v.row(w);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += vrow[j] * h[j];
        const double g = numkit::sigmoid(s) - label;  // dL/ds
        double* dvrow = dv.row(w);
        for (std::size_t j = 0; j < d; ++j) {
            dvrow[j] += g * h[j];
            dh[j] += g * vrow[j];
        }
    };
    output_grad(target, 1.0);
    for (std::size_t neg : negatives) output_grad(neg, 0.0);

    double* ducx = du.row(ctx);
    for (std::size_t j = 0; j < d; ++j) ducx[j] += dh[j];
    for (std::size_t r : retained) {
        double* durow = du.row(r);
        for (std::size_t j = 0; j < d; ++j) durow[j] += doc_coef * dh[j];
    }
}

// Skip-gram with negative sampling over the corrupted document context. The
// corruption is resampled per (document, epoch); the document term and its
// accumulated gradient are applied once per document, as in the reference
// descent for this objective (the in-document staleness is deliberate).
inline EmbeddingModel train(const std::vector<std::vector<std::string>>& documents,
                            const corpus::Vocabulary& vocab, const Doc2VecConfig& config,
                            numkit::Rng& rng) {
    if (vocab.empty()) throw ConfigError("vocabulary", "doc2vecc training needs a nonempty vocabulary");

    EmbeddingModel model;
    model.vocab = vocab;
    model.config = config;
    const std::size_t V = vocab.size(), d = config.dim;
    model.u = Matrix(V, d);
    model.v_out = Matrix(V, d);
    const double init_r = 0.5 / static_cast<double>(d);
    numkit::fill_uniform(model.u, rng, -init_r, init_r);

    std::vector<std::vector<std::size_t>> encoded;
    encoded.reserve(documents.size());
    std::int64_t total_tokens = 0;
    for (const auto& doc : documents) {
        encoded.push_back(vocab.encode_all(doc));
        total_tokens += static_cast<std::int64_t>(doc.size());
    }
    if (total_tokens == 0) throw ConfigError("corpus", "doc2vecc training needs a nonempty corpus");

    UnigramTable table(vocab);

    // word2vec-style keep probability for frequent-word subsampling
    std::vector<double> keep(V, 1.0);
    if (config.subsample > 0.0) {
        const double tt = config.subsample * static_cast<double>(total_tokens);
        for (std::size_t w = 0; w < V; ++w) {
            auto cnt = static_cast<double>(vocab.count(w));
            if (cnt > tt) keep[w] = (std::sqrt(cnt / tt) + 1.0) * tt / cnt;
        }
    }

    const double q = config.corruption;
    std::vector<double> s(d), dh(d), doc_grad(d);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        // linear decay, floored so late epochs still move
        const double lr = config.epochs <= 1
                              ? config.lr
                              : std::max(config.lr * (1.0 - static_cast<double>(epoch) /
                                                                static_cast<double>(config.epochs)),
                                         config.lr * 1e-2);
        double loss_sum = 0.0;
        std::size_t pair_count = 0;

        for (const auto& doc : encoded) {
            const std::size_t n = doc.size();
            if (n < 2) continue;

            auto cr = corrupt(n, q, rng);
            const double doc_coef = cr.retained.empty() ? 0.0 : cr.scale / static_cast<double>(n);
            std::fill(s.begin(), s.end(), 0.0);
            for (std::size_t pos : cr.retained) {
                const double* row = model.u.row(doc[pos]);
                for (std::size_t j = 0; j < d; ++j) s[j] += row[j];
            }
            for (std::size_t j = 0; j < d; ++j) s[j] *= doc_coef;
            std::fill(doc_grad.begin(), doc_grad.end(), 0.0);

            for (std::size_t pos = 0; pos < n; ++pos) {
                const std::size_t target = doc[pos];
                if (keep[target] < 1.0 && rng.uniform() >= keep[target]) continue;
                const std::size_t lo = pos >= config.window ? pos - config.window : 0;
                const std::size_t hi = std::min(n - 1, pos + config.window);
                for (std::size_t cpos = lo; cpos <= hi; ++cpos) {
                    if (cpos == pos) continue;
                    const std::size_t ctx = doc[cpos];

                    const double* ucx = model.u.row(ctx);
                    for (std::size_t j = 0; j < d; ++j) dh[j] = 0.0;

                    double pair_loss_acc = 0.0;
                    auto push_output = [&](std::size_t w, double label) {
                        double* vrow = model.v_out.row(w);
                        double sc = 0.0;
                        for (std::size_t j = 0; j < d; ++j) sc += vrow[j] * (ucx[j] + s[j]);
                        const double p = numkit::sigmoid(sc);
                        const double g = p - label;
                        pair_loss_acc += label > 0.5 ? -std::log(std::max(p, 1e-12))
                                                     : -std::log(std::max(1.0 - p, 1e-12));
                        for (std::size_t j = 0; j < d; ++j) {
                            dh[j] += g * vrow[j];
                            vrow[j] -= lr * g * (ucx[j] + s[j]);
                        }
                    };
                    push_output(target, 1.0);
                    for (std::size_t k = 0; k < config.negatives; ++k) {
                        std::size_t neg = table.sample(rng);
                        if (neg == target) continue;  // drop collisions rather than resample
                        push_output(neg, 0.0);
                    }

                    double* ucx_mut = model.u.row(ctx);
                    for (std::size_t j = 0; j < d; ++j) {
                        ucx_mut[j] -= lr * dh[j];
                        doc_grad[j] += dh[j];
                    }
                    loss_sum += pair_loss_acc;
                    ++pair_count;
                }
            }

            // apply the accumulated document-context gradient once per doc
            if (doc_coef != 0.0) {
                for (std::size_t pos : cr.retained) {
                    double* row = model.u.row(doc[pos]);
                    for (std::size_t j = 0; j < d; ++j) row[j] -= lr * doc_coef * doc_grad[j];
                }
            }
        }
        model.epoch_loss.push_back(pair_count == 0 ? 0.0 : loss_sum / static_cast<double>(pair_count));
    }

    model.u.check_finite("doc2vecc input embeddings");
    model.v_out.check_finite("doc2vecc output embeddings");
    return model;
}

}  // namespace vitaltext::doc2vecc
