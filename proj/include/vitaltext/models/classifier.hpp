#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "vitaltext/errors.hpp"
#include "vitaltext/models/fusion.hpp"
#include "vitaltext/models/lstm.hpp"
#include "vitaltext/numkit/losses.hpp"
#include "vitaltext/numkit/optim.hpp"

namespace vitaltext::models {

enum class ModelKind { vital_lstm, concat_lstm, multimodal };

// Whether a day's embedding is visible to every step of that day or only to
// its last step (the note aggregate carries timestamps until end of day —
// the spec of when it becomes "known" is ambiguous, so both are supported).
enum class EmbeddingVisibility { from_start, end_of_day };

inline const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::vital_lstm: return "vital_lstm";
        case ModelKind::concat_lstm: return "concat_lstm";
        case ModelKind::multimodal: return "multimodal";
    }
    throw DomainError("bad model kind");
}

struct ModelConfig {
    ModelKind kind = ModelKind::vital_lstm;
    std::size_t input_dim = 17;
    std::size_t emb_dim = 0;  // d of each daily embedding; 0 only for vital_lstm
    std::size_t hidden = 256;
    std::size_t text_hidden = 100;
    std::size_t joint_hidden = 300;
    EmbeddingVisibility visibility = EmbeddingVisibility::from_start;
    std::size_t steps = 24;
};

// One preprocessed stay: standardized vitals plus the two daily embeddings.
struct Example {
    Matrix x;  // steps x input_dim
    std::vector<double> e1, e2;
    double label = 0.0;
};
using Dataset = std::vector<Example>;

struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t max_epochs = 30;
    std::size_t patience = 5;
    double lr = 1e-4;
    bool use_adam = false;
    std::uint64_t seed = 0;
};

struct TrainHistory {
    std::vector<double> train_loss, val_loss;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    bool failed = false;  // non-finite loss; the run is excluded by the protocol
};

class Classifier {
  public:
    Classifier(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
        if (cfg.kind != ModelKind::vital_lstm && cfg.emb_dim == 0) {
            throw ConfigError("emb_dim", "text-aware models need emb_dim > 0");
        }
        numkit::Rng rng(init_seed, 0x7e7);
        LstmSpec lstm{lstm_input_dim(), cfg_.hidden};
        lstm_init_params(params_, "lstm", lstm, rng);
        if (cfg_.kind == ModelKind::multimodal) {
            FusionSpec fspec{cfg_.hidden, cfg_.emb_dim, cfg_.text_hidden, cfg_.joint_hidden};
            fusion_init_params(params_, "fusion", fspec, rng);
        } else {
            numkit::fill_glorot(params_.create("out.w", 1, cfg_.hidden), rng);
            params_.create("out.b", 1, 1);
        }
    }

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    std::size_t lstm_input_dim() const {
        return cfg_.kind == ModelKind::concat_lstm ? cfg_.input_dim + cfg_.emb_dim : cfg_.input_dim;
    }

    // Mean BCE over the batch; fills probs (B x 1). Backward accumulates
    // parameter gradients when requested.
    double batch_loss(const Dataset& data, const std::vector<std::size_t>& idx, Matrix* probs_out,
                      bool backward) {
        const std::size_t B = idx.size();
        if (B == 0) throw DomainError("empty batch");
        std::vector<Matrix> xs = assemble_steps(data, idx);

        auto cache = lstm_forward(xs, params_, "lstm");
        Matrix probs;
        FusionCache fcache;
        if (cfg_.kind == ModelKind::multimodal) {
            Matrix e(B, 2 * cfg_.emb_dim);
            for (std::size_t r = 0; r < B; ++r) {
                const Example& ex = data[idx[r]];
                for (std::size_t j = 0; j < cfg_.emb_dim; ++j) {
                    e(r, j) = ex.e1[j];
                    e(r, cfg_.emb_dim + j) = ex.e2[j];
                }
            }
            fcache = fusion_forward(cache.h_last(), e, params_, "fusion");
            probs = fcache.prob;
        } else {
            Matrix logit = numkit::affine(cache.h_last(), params_.param("out.w"), params_.param("out.b"));
            probs = numkit::sigmoid(logit);
        }

        double total = 0.0;
        for (std::size_t r = 0; r < B; ++r) {
            total += numkit::binary_cross_entropy(probs(r, 0), data[idx[r]].label);
        }
        const double loss = total / static_cast<double>(B);
        if (probs_out) *probs_out = probs;
        if (!backward) return loss;

        // gradient on the logit of mean BCE: (ŷ - y)/B
        Matrix dz(B, 1);
        for (std::size_t r = 0; r < B; ++r) {
            dz(r, 0) = (probs(r, 0) - data[idx[r]].label) / static_cast<double>(B);
        }
        Matrix dh_last;
        if (cfg_.kind == ModelKind::multimodal) {
            dh_last = fusion_backward(fcache, dz, params_, "fusion");
        } else {
            dh_last = Matrix(B, cfg_.hidden);
            numkit::affine_backward(cache.h_last(), params_.param("out.w"), dz,
                                    params_.grad("out.w"), params_.grad("out.b"), &dh_last);
        }
        std::vector<Matrix> dh(cache.T, Matrix(B, cfg_.hidden));
        dh.back() = dh_last;
        lstm_backward(cache, dh, params_, "lstm");
        return loss;
    }

    std::vector<double> predict(const Dataset& data, std::size_t batch_size = 256) {
        std::vector<double> scores(data.size());
        std::vector<std::size_t> idx;
        for (std::size_t start = 0; start < data.size(); start += batch_size) {
            idx.clear();
            for (std::size_t i = start; i < std::min(start + batch_size, data.size()); ++i)
                idx.push_back(i);
            Matrix probs;
            batch_loss(data, idx, &probs, false);
            for (std::size_t r = 0; r < idx.size(); ++r) scores[idx[r]] = probs(r, 0);
        }
        return scores;
    }

    double dataset_loss(const Dataset& data, std::size_t batch_size = 256) {
        double total = 0.0;
        std::vector<std::size_t> idx;
        for (std::size_t start = 0; start < data.size(); start += batch_size) {
            idx.clear();
            for (std::size_t i = start; i < std::min(start + batch_size, data.size()); ++i)
                idx.push_back(i);
            total += batch_loss(data, idx, nullptr, false) * static_cast<double>(idx.size());
        }
        return total / static_cast<double>(data.size());
    }

    // Mini-batch training with early stopping on validation loss; the best
    // epoch's parameters are restored before returning.
    TrainHistory train(const Dataset& train_set, const Dataset& val_set, const TrainConfig& tc) {
        if (train_set.empty() || val_set.empty()) {
            throw ConfigError("dataset", "train and val sets must be nonempty");
        }
        numkit::Rng shuffle_rng(tc.seed, 0x51f);
        numkit::AdamState adam;
        if (tc.use_adam) adam.init(params_);

        TrainHistory hist;
        std::vector<std::size_t> order(train_set.size());
        std::iota(order.begin(), order.end(), 0);

        double best_val = std::numeric_limits<double>::infinity();
        auto best_snapshot = params_.snapshot_values();
        std::size_t since_best = 0;

        for (std::size_t epoch = 0; epoch < tc.max_epochs; ++epoch) {
            shuffle_rng.shuffle(order);
            double epoch_loss = 0.0;
            std::size_t seen = 0;
            try {
                for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
                    std::vector<std::size_t> idx(
                        order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(
                                            std::min(start + tc.batch_size, order.size())));
                    double loss = batch_loss(train_set, idx, nullptr, true);
                    if (!std::isfinite(loss)) throw TrainingError("non-finite training loss");
                    epoch_loss += loss * static_cast<double>(idx.size());
                    seen += idx.size();
                    if (tc.use_adam) {
                        numkit::adam_step(params_, adam, tc.lr);
                    } else {
                        numkit::sgd_step(params_, tc.lr);
                    }
                }
            } catch (const TrainingError&) {
                hist.failed = true;
                break;
            }
            hist.train_loss.push_back(epoch_loss / static_cast<double>(seen));

            double val_loss = dataset_loss(val_set);
            if (!std::isfinite(val_loss)) {
                hist.failed = true;
                break;
            }
            hist.val_loss.push_back(val_loss);
            hist.epochs_run = epoch + 1;

            if (val_loss < best_val) {
                best_val = val_loss;
                best_snapshot = params_.snapshot_values();
                hist.best_epoch = epoch;
                since_best = 0;
            } else {
                ++since_best;
                if (since_best >= tc.patience) break;
            }
        }
        params_.restore_values(best_snapshot);
        return hist;
    }

    // Timestep-major batch assembly; the concat model appends the visible
    // day's embedding to every step's input.
    std::vector<Matrix> assemble_steps(const Dataset& data, const std::vector<std::size_t>& idx) const {
        const std::size_t B = idx.size();
        const std::size_t T = cfg_.steps;
        const std::size_t in = lstm_input_dim();
        std::vector<Matrix> xs(T, Matrix(B, in));
        const std::size_t half = T / 2;
        for (std::size_t r = 0; r < B; ++r) {
            const Example& ex = data[idx[r]];
            if (ex.x.rows() != T || ex.x.cols() != cfg_.input_dim) {
                throw DimensionError("example vitals " + ex.x.shape_str() + ", expected " +
                                     std::to_string(T) + "x" + std::to_string(cfg_.input_dim));
            }
            for (std::size_t t = 0; t < T; ++t) {
                double* row = xs[t].row(r);
                for (std::size_t j = 0; j < cfg_.input_dim; ++j) row[j] = ex.x(t, j);
                if (cfg_.kind != ModelKind::concat_lstm) continue;
                const std::vector<double>* e = nullptr;
                if (cfg_.visibility == EmbeddingVisibility::from_start) {
                    e = t < half ? &ex.e1 : &ex.e2;
                } else {  // end_of_day: only the day's final step sees it
                    if (t == half - 1) e = &ex.e1;
                    if (t == T - 1) e = &ex.e2;
                }
                if (e) {
                    if (e->size() != cfg_.emb_dim) {
                        throw DimensionError("embedding size " + std::to_string(e->size()) +
                                             ", expected " + std::to_string(cfg_.emb_dim));
                    }
                    for (std::size_t j = 0; j < cfg_.emb_dim; ++j) row[cfg_.input_dim + j] = (*e)[j];
                }
            }
        }
        return xs;
    }

  private:
    ModelConfig cfg_;
    ParamStore params_;
};

}  // namespace vitaltext::models
