#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "vitaltext/errors.hpp"

namespace vitaltext::pipeline {

namespace detail {

inline void check_metric_input(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw DimensionError("metric: " + std::to_string(scores.size()) + " scores vs " +
                             std::to_string(labels.size()) + " labels");
    if (scores.empty()) throw MetricError("metric: empty input");
    for (int y : labels)
        if (y != 0 && y != 1) throw DomainError("metric: labels must be 0 or 1");
}

}  // namespace detail

// Probability that a random positive outscores a random negative, ties
// counted 1/2 (Mann-Whitney U via midranks).
inline double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    detail::check_metric_input(scores, labels);
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw MetricError("auroc: needs both classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based group mean
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) pos_rank_sum += mid_rank;
        i = j;
    }
    const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Average precision: items ranked by descending score, ties kept in input
// order (stable), AP = mean over positives of precision at that item's rank.
inline double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
    detail::check_metric_input(scores, labels);
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y);
    if (n_pos == 0) throw MetricError("auprc: needs at least one positive");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[order[k]] != 1) continue;
        ++tp;
        ap += static_cast<double>(tp) / static_cast<double>(k + 1);
    }
    return ap / static_cast<double>(n_pos);
}

// Positive prediction at score >= threshold; zero denominators give 0.
inline double f1(const std::vector<double>& scores, const std::vector<int>& labels,
                 double threshold = 0.5) {
    detail::check_metric_input(scores, labels);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (pred && labels[i] == 1) ++tp;
        if (pred && labels[i] == 0) ++fp;
        if (!pred && labels[i] == 1) ++fn;
    }
    const std::size_t denom = 2 * tp + fp + fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace vitaltext::pipeline
