#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <vector>

#include "vitaltext/errors.hpp"
#include "vitaltext/log.hpp"
#include "vitaltext/numkit/matrix.hpp"
#include "vitaltext/numkit/rng.hpp"

namespace vitaltext::pipeline {

using numkit::Matrix;

struct TsneConfig {
    double perplexity = 30.0;
    std::size_t iters = 1000;
    double lr = 200.0;
    double exaggeration = 12.0;
    std::size_t exaggeration_iters = 250;
    double momentum_start = 0.5;
    double momentum_final = 0.8;
    std::size_t momentum_switch = 250;
    std::uint64_t seed = 0;
};

struct TsneResult {
    Matrix coords;                   // n x 2
    std::vector<double> kl_history;  // [t] = KL after t gradient steps (unexaggerated P)
    double final_kl = 0.0;
    bool jittered = false;
};

namespace detail {

inline Matrix pairwise_sq_dists(const Matrix& x) {
    const std::size_t n = x.rows(), d = x.cols();
    Matrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* xj = x.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = xi[k] - xj[k];
                acc += diff * diff;
            }
            dist(i, j) = acc;
            dist(j, i) = acc;
        }
    }
    return dist;
}

inline constexpr double kProbFloor = 1e-12;

}  // namespace detail

// High-dimensional affinities: per-point Gaussian bandwidths found by binary
// search so each conditional distribution hits the target perplexity within
// 1e-5, then symmetrized to sum to 1. Exact duplicate rows make the search
// degenerate, so duplicates get 1e-10-scale jitter first (logged).
inline Matrix tsne_p_matrix(const Matrix& x, double perplexity, std::uint64_t seed = 0,
                            bool* jittered_out = nullptr) {
    const std::size_t n = x.rows();
    if (n < 4) throw ConfigError("perplexity", "t-SNE needs at least 4 points");
    if (static_cast<double>(n) <= 3.0 * perplexity)
        throw ConfigError("perplexity",
                          "need n > 3*perplexity (n=" + std::to_string(n) +
                              ", perplexity=" + std::to_string(perplexity) + ")");

    Matrix dist = detail::pairwise_sq_dists(x);
    bool dup = false;
    for (std::size_t i = 0; i < n && !dup; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (dist(i, j) <= 0.0) {
                dup = true;
                break;
            }
    if (jittered_out) *jittered_out = dup;
    if (dup) {
        log::warn("tsne: duplicate points detected; adding 1e-10 jitter");
        Matrix xj = x;
        numkit::Rng rng(seed, 0x71772);
        for (std::size_t k = 0; k < xj.size(); ++k) xj.raw()[k] += rng.normal() * 1e-10;
        dist = detail::pairwise_sq_dists(xj);
    }

    Matrix cond(n, n);
    std::vector<double> p_row(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d_min = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) d_min = std::min(d_min, dist(i, j));
        double beta = 1.0, beta_lo = 0.0, beta_hi = std::numeric_limits<double>::infinity();
        for (std::size_t step = 0; step < 1000; ++step) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                p_row[j] = j == i ? 0.0 : std::exp(-beta * (dist(i, j) - d_min));
                sum += p_row[j];
            }
            double entropy = 0.0;  // nats
            for (std::size_t j = 0; j < n; ++j) {
                if (p_row[j] <= 0.0) continue;
                const double p = p_row[j] / sum;
                entropy -= p * std::log(p);
            }
            const double perp = std::exp(entropy);
            if (std::fabs(perp - perplexity) < 1e-5) break;
            if (perp > perplexity) {  // too flat: narrow the kernel
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
            } else {
                beta_hi = beta;
                beta = 0.5 * (beta + beta_lo);
            }
            for (std::size_t j = 0; j < n; ++j)
                p_row[j] = j == i ? 0.0 : std::exp(-beta * (dist(i, j) - d_min));
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += p_row[j];
        for (std::size_t j = 0; j < n; ++j) cond(i, j) = p_row[j] / sum;
    }

    Matrix p(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            p(i, j) = std::max((cond(i, j) + cond(j, i)) / (2.0 * static_cast<double>(n)),
                               detail::kProbFloor);
        }
    return p;
}

// Student-t joint Q from 2D coordinates plus the normalizer Z.
inline Matrix tsne_q_num(const Matrix& y, double& z_out) {
    const std::size_t n = y.rows();
    Matrix q(n, n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = y(i, 0) - y(j, 0);
            const double dy = y(i, 1) - y(j, 1);
            const double v = 1.0 / (1.0 + dx * dx + dy * dy);
            q(i, j) = v;
            q(j, i) = v;
            z += 2.0 * v;
        }
    z_out = z;
    return q;
}

inline double tsne_kl(const Matrix& p, const Matrix& y) {
    double z = 0.0;
    Matrix q = tsne_q_num(y, z);
    const std::size_t n = y.rows();
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double pij = p(i, j);
            const double qij = std::max(q(i, j) / z, detail::kProbFloor);
            kl += pij * std::log(pij / qij);
        }
    return kl;
}

// dKL/dy_i = 4 sum_j (p_ij - q_ij) (1 + |y_i - y_j|^2)^-1 (y_i - y_j);
// `exaggeration` scales p (early exaggeration phase). Overwrites grad.
inline void tsne_grad(const Matrix& p, const Matrix& y, Matrix& grad, double exaggeration = 1.0) {
    double z = 0.0;
    Matrix q = tsne_q_num(y, z);
    const std::size_t n = y.rows();
    grad = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        double gx = 0.0, gy = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double mult = (exaggeration * p(i, j) - q(i, j) / z) * q(i, j);
            gx += mult * (y(i, 0) - y(j, 0));
            gy += mult * (y(i, 1) - y(j, 1));
        }
        grad(i, 0) = 4.0 * gx;
        grad(i, 1) = 4.0 * gy;
    }
}

// Exact O(n^2) t-SNE with early exaggeration, momentum schedule, and
// per-entry adaptive gains.
inline TsneResult tsne(const Matrix& x, const TsneConfig& cfg = TsneConfig{}) {
    const std::size_t n = x.rows();
    TsneResult result;
    Matrix p = tsne_p_matrix(x, cfg.perplexity, cfg.seed, &result.jittered);

    numkit::Rng rng(cfg.seed, 0x7511e);
    Matrix y(n, 2);
    numkit::fill_normal(y, rng, 0.0, 1e-4);
    Matrix update(n, 2), gains(n, 2), grad(n, 2);
    gains.fill(1.0);

    result.kl_history.reserve(cfg.iters + 1);
    result.kl_history.push_back(tsne_kl(p, y));
    for (std::size_t t = 0; t < cfg.iters; ++t) {
        const double exag = t < cfg.exaggeration_iters ? cfg.exaggeration : 1.0;
        const double momentum = t < cfg.momentum_switch ? cfg.momentum_start : cfg.momentum_final;
        tsne_grad(p, y, grad, exag);
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double g = grad.raw()[k];
            const double u = update.raw()[k];
            double& gain = gains.raw()[k];
            gain = (g > 0.0) != (u > 0.0) ? gain + 0.2 : gain * 0.8;
            if (gain < 0.01) gain = 0.01;
            update.raw()[k] = momentum * u - cfg.lr * gain * g;
            y.raw()[k] += update.raw()[k];
        }
        double mean_x = 0.0, mean_y = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean_x += y(i, 0);
            mean_y += y(i, 1);
        }
        mean_x /= static_cast<double>(n);
        mean_y /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            y(i, 0) -= mean_x;
            y(i, 1) -= mean_y;
        }
        result.kl_history.push_back(tsne_kl(p, y));
    }
    result.final_kl = result.kl_history.back();
    result.coords = std::move(y);
    return result;
}

// CSV with a fixed "stay_id,x,y,label" header, full double precision.
inline void write_tsne_csv(const std::string& path, const std::vector<std::int64_t>& stay_ids,
                           const Matrix& coords, const std::vector<int>& labels) {
    if (coords.rows() != stay_ids.size() || coords.rows() != labels.size() || coords.cols() != 2)
        throw DimensionError("write_tsne_csv: mismatched inputs");
    std::ofstream out(path);
    if (!out) throw Error("cannot open t-SNE CSV for writing: " + path);
    out << "stay_id,x,y,label\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < coords.rows(); ++i)
        out << stay_ids[i] << ',' << coords(i, 0) << ',' << coords(i, 1) << ',' << labels[i] << '\n';
}

// Minimal self-contained SVG scatter, colored by binary label.
inline void write_tsne_svg(const std::string& path, const Matrix& coords,
                           const std::vector<int>& labels) {
    if (coords.rows() != labels.size() || coords.cols() != 2)
        throw DimensionError("write_tsne_svg: mismatched inputs");
    const double w = 640.0, h = 480.0, margin = 24.0;
    double min_x = coords(0, 0), max_x = min_x, min_y = coords(0, 1), max_y = min_y;
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        min_x = std::min(min_x, coords(i, 0));
        max_x = std::max(max_x, coords(i, 0));
        min_y = std::min(min_y, coords(i, 1));
        max_y = std::max(max_y, coords(i, 1));
    }
    const double span_x = max_x > min_x ? max_x - min_x : 1.0;
    const double span_y = max_y > min_y ? max_y - min_y : 1.0;
    std::ofstream out(path);
    if (!out) throw Error("cannot open t-SNE SVG for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << w << ' ' << h
        << "\" width=\"" << w << "\" height=\"" << h << "\">\n";
    out << "  <rect width=\"" << w << "\" height=\"" << h << "\" fill=\"#ffffff\"/>\n";
    out << std::fixed << std::setprecision(2);
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        const double cx = margin + (coords(i, 0) - min_x) / span_x * (w - 2.0 * margin);
        const double cy = margin + (coords(i, 1) - min_y) / span_y * (h - 2.0 * margin);
        const char* fill = labels[i] == 1 ? "#d62728" : "#1f77b4";
        out << "  <circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"3\" fill=\"" << fill
            << "\" fill-opacity=\"0.8\"/>\n";
    }
    out << "</svg>\n";
}

}  // namespace vitaltext::pipeline
