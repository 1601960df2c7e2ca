#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vitaltext/errors.hpp"
#include "vitaltext/log.hpp"
#include "vitaltext/numkit/rng.hpp"
#include "vitaltext/pipeline/metrics.hpp"

namespace vitaltext::pipeline {

struct EvalReport {
    std::string model_id;
    std::string feature_set;  // table columns
    std::string structure;
    double auroc_mean = 0.0;
    double auroc_std = 0.0;
    double auprc_mean = 0.0;
    double auprc_std = 0.0;
    std::size_t n_resamples = 100;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return nlohmann::json{{"model_id", model_id},     {"feature_set", feature_set},
                              {"structure", structure},   {"auroc_mean", auroc_mean},
                              {"auroc_std", auroc_std},   {"auprc_mean", auprc_mean},
                              {"auprc_std", auprc_std},   {"n_resamples", n_resamples},
                              {"seed", seed}};
    }

    static EvalReport from_json(const nlohmann::json& j) {
        EvalReport r;
        r.model_id = j.at("model_id").get<std::string>();
        r.feature_set = j.at("feature_set").get<std::string>();
        r.structure = j.at("structure").get<std::string>();
        r.auroc_mean = j.at("auroc_mean").get<double>();
        r.auroc_std = j.at("auroc_std").get<double>();
        r.auprc_mean = j.at("auprc_mean").get<double>();
        r.auprc_std = j.at("auprc_std").get<double>();
        r.n_resamples = j.at("n_resamples").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        return r;
    }
};

inline void write_eval_report(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open report file for writing: " + path);
    out << report.to_json().dump(2) << '\n';
}

inline EvalReport read_eval_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return EvalReport::from_json(j);
}

// Text table, one row per report: feature set, structure, AUROC +- std,
// AUPRC +- std. The +- value is the bootstrap standard deviation.
inline std::string render_report_table(const std::vector<EvalReport>& reports) {
    std::size_t w_feat = 11, w_struct = 9;
    for (const auto& r : reports) {
        w_feat = std::max(w_feat, r.feature_set.size());
        w_struct = std::max(w_struct, r.structure.size());
    }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(w_feat)) << "feature set" << "  "
        << std::setw(static_cast<int>(w_struct)) << "structure" << "  " << std::setw(17)
        << "AUROC" << "  " << std::setw(17) << "AUPRC" << '\n';
    out << std::string(w_feat + w_struct + 4 + 17 + 2 + 17, '-') << '\n';
    out << std::fixed << std::setprecision(4);
    for (const auto& r : reports) {
        std::ostringstream roc, prc;
        roc << std::fixed << std::setprecision(4) << r.auroc_mean << " +- " << r.auroc_std;
        prc << std::fixed << std::setprecision(4) << r.auprc_mean << " +- " << r.auprc_std;
        out << std::left << std::setw(static_cast<int>(w_feat)) << r.feature_set << "  "
            << std::setw(static_cast<int>(w_struct)) << r.structure << "  " << std::setw(17)
            << roc.str() << "  " << std::setw(17) << prc.str() << '\n';
    }
    return out.str();
}

// Bootstrap the test metrics: n resamples with replacement of the full test
// size; a resample missing a class (or without positives) is redrawn so the
// report always aggregates exactly n valid resamples.
inline EvalReport bootstrap_eval(const std::string& model_id, const std::vector<double>& scores,
                                 const std::vector<int>& labels, std::size_t n_resamples = 100,
                                 std::uint64_t seed = 0) {
    detail::check_metric_input(scores, labels);
    if (n_resamples == 0) throw ConfigError("n_resamples", "bootstrap needs at least one resample");
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y);
    if (n_pos == 0 || n_pos == labels.size())
        throw MetricError("bootstrap_eval: test set has a single class");

    const std::size_t n = scores.size();
    numkit::Rng rng(seed, 0xb007);
    std::vector<double> roc_vals, prc_vals;
    roc_vals.reserve(n_resamples);
    prc_vals.reserve(n_resamples);
    std::vector<double> s(n);
    std::vector<int> y(n);
    std::size_t redraws = 0;
    for (std::size_t r = 0; r < n_resamples; ++r) {
        while (true) {
            std::size_t pos = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t pick = rng.bounded(static_cast<std::uint32_t>(n));
                s[i] = scores[pick];
                y[i] = labels[pick];
                pos += static_cast<std::size_t>(y[i]);
            }
            if (pos > 0 && pos < n) break;
            ++redraws;
            log::debug("bootstrap resample " + std::to_string(r) + " degenerate; redrawn");
        }
        roc_vals.push_back(auroc(s, y));
        prc_vals.push_back(auprc(s, y));
    }
    if (redraws > 0)
        log::info("bootstrap_eval: " + std::to_string(redraws) + " degenerate resamples redrawn");

    auto mean_std = [](const std::vector<double>& v) {
        const double n_v = static_cast<double>(v.size());
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= n_v;
        if (v.size() == 1) return std::pair<double, double>{mean, 0.0};
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::pair<double, double>{mean, std::sqrt(ss / (n_v - 1.0))};
    };
    EvalReport report;
    report.model_id = model_id;
    report.n_resamples = n_resamples;
    report.seed = seed;
    std::tie(report.auroc_mean, report.auroc_std) = mean_std(roc_vals);
    std::tie(report.auprc_mean, report.auprc_std) = mean_std(prc_vals);
    return report;
}

}  // namespace vitaltext::pipeline
