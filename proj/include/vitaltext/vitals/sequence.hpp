#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitaltext/errors.hpp"
#include "vitaltext/numkit/matrix.hpp"
#include "vitaltext/stay.hpp"
#include "vitaltext/vitals/vital_event.hpp"

namespace vitaltext::vitals {

// Discretized 48 h window: values is 24x17, mask marks cells observed before
// imputation (mask never changes after discretize).
struct VitalSequence {
    std::int64_t stay_id = 0;
    numkit::Matrix values{kSteps, kSignals};
    std::vector<std::uint8_t> mask = std::vector<std::uint8_t>(kSteps * kSignals, 0);

    bool observed(std::size_t t, std::size_t l) const { return mask[t * kSignals + l] != 0; }
    void set_observed(std::size_t t, std::size_t l) { mask[t * kSignals + l] = 1; }
};

inline VitalSequence discretize(const std::vector<VitalEvent>& events, std::int64_t stay_id) {
    VitalSequence seq;
    seq.stay_id = stay_id;
    // last event (by time, then input order) in a bin wins
    std::vector<double> best_time(kSteps * kSignals, -1.0);
    for (const auto& e : events) {
        if (e.time < 0.0) throw DataError("negative event time for stay " + std::to_string(stay_id));
        if (e.time >= kWindowHours) continue;
        auto t = static_cast<std::size_t>(std::floor(e.time / kStepHours));
        auto l = static_cast<std::size_t>(e.signal);
        std::size_t cell = t * kSignals + l;
        if (e.time >= best_time[cell]) {
            best_time[cell] = e.time;
            seq.values(t, l) = e.value;
            seq.mask[cell] = 1;
        }
    }
    return seq;
}

// Per-signal statistics from the training split only. Imputation default is
// the training mean of observed values (zero for never-observed signals).
struct PopulationStats {
    std::vector<double> mean = std::vector<double>(kSignals, 0.0);
    std::vector<double> stddev = std::vector<double>(kSignals, 0.0);
    std::vector<double> impute_default = std::vector<double>(kSignals, 0.0);

    void save(const std::string& path) const {
        nlohmann::json j{{"mean", mean}, {"std", stddev}, {"impute_default", impute_default}};
        std::ofstream out(path);
        if (!out) throw DataError("cannot open for writing: " + path);
        out << j.dump(2) << "\n";
    }

    static PopulationStats load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw MissingFileError(path);
        nlohmann::json j = nlohmann::json::parse(in);
        PopulationStats s;
        s.mean = j.at("mean").get<std::vector<double>>();
        s.stddev = j.at("std").get<std::vector<double>>();
        s.impute_default = j.at("impute_default").get<std::vector<double>>();
        if (s.mean.size() != kSignals || s.stddev.size() != kSignals ||
            s.impute_default.size() != kSignals) {
            throw DataError(path + ": stats must cover all signals");
        }
        return s;
    }
};

// Rejects anything not tagged train so val/test can never leak into the stats.
inline PopulationStats compute_population_stats(const std::vector<VitalSequence>& seqs,
                                                const std::vector<Split>& splits) {
    if (seqs.size() != splits.size()) throw DimensionError("sequences and split tags differ in length");
    for (Split s : splits) {
        if (s != Split::train) throw ConfigError("population_stats", "stats accept train-tagged stays only");
    }
    PopulationStats stats;
    std::vector<double> sum(kSignals, 0.0), sumsq(kSignals, 0.0);
    std::vector<std::int64_t> n(kSignals, 0);
    for (const auto& seq : seqs) {
        for (std::size_t t = 0; t < kSteps; ++t) {
            for (std::size_t l = 0; l < kSignals; ++l) {
                if (!seq.observed(t, l)) continue;
                double v = seq.values(t, l);
                sum[l] += v;
                sumsq[l] += v * v;
                n[l] += 1;
            }
        }
    }
    for (std::size_t l = 0; l < kSignals; ++l) {
        if (n[l] == 0) continue;
        double m = sum[l] / static_cast<double>(n[l]);
        double var = sumsq[l] / static_cast<double>(n[l]) - m * m;
        stats.mean[l] = m;
        stats.stddev[l] = std::sqrt(std::max(var, 0.0));
        stats.impute_default[l] = m;
    }
    return stats;
}

// Forward-fill per signal; leading gaps take the population default.
inline VitalSequence impute(VitalSequence seq, const PopulationStats& stats) {
    for (std::size_t l = 0; l < kSignals; ++l) {
        bool seen = false;
        double last = stats.impute_default[l];
        for (std::size_t t = 0; t < kSteps; ++t) {
            if (seq.observed(t, l)) {
                last = seq.values(t, l);
                seen = true;
            } else {
                seq.values(t, l) = last;
            }
        }
        (void)seen;
    }
    return seq;
}

inline constexpr double kStdFloor = 1e-6;

inline VitalSequence standardize(VitalSequence seq, const PopulationStats& stats) {
    for (std::size_t l = 0; l < kSignals; ++l) {
        double denom = std::max(stats.stddev[l], kStdFloor);
        for (std::size_t t = 0; t < kSteps; ++t) {
            seq.values(t, l) = (seq.values(t, l) - stats.mean[l]) / denom;
        }
    }
    return seq;
}

}  // namespace vitaltext::vitals
