#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "vitaltext/errors.hpp"
#include "vitaltext/numkit/rng.hpp"
#include "vitaltext/stay.hpp"

namespace vitaltext::vitals {

// Patient-grouped split: patients are shuffled deterministically, then
// assigned contiguously until each split reaches its stay-count target, so
// all stays of one patient land in one split.
inline void split_cohort(std::vector<StayRecord>& stays, double f_train, double f_val,
                         double f_test, std::uint64_t seed) {
    if (std::fabs(f_train + f_val + f_test - 1.0) > 1e-9) {
        throw ConfigError("split_fractions", "fractions must sum to 1");
    }
    if (f_train < 0 || f_val < 0 || f_test < 0) {
        throw ConfigError("split_fractions", "fractions must be nonnegative");
    }
    if (stays.size() < 3) throw ConfigError("cohort", "need at least 3 stays to split");

    // patients in first-appearance order, so input order + seed fix the result
    std::vector<std::int64_t> patients;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> stays_of;
    for (std::size_t i = 0; i < stays.size(); ++i) {
        auto [it, inserted] = stays_of.try_emplace(stays[i].patient_id);
        if (inserted) patients.push_back(stays[i].patient_id);
        it->second.push_back(i);
    }

    numkit::Rng rng(seed);
    rng.shuffle(patients);

    const auto n = static_cast<double>(stays.size());
    const auto cut_train = static_cast<std::size_t>(std::llround(f_train * n));
    const auto cut_val = static_cast<std::size_t>(std::llround((f_train + f_val) * n));

    std::size_t assigned = 0;
    for (std::int64_t pid : patients) {
        Split tag = assigned < cut_train ? Split::train
                    : assigned < cut_val ? Split::val
                                         : Split::test;
        for (std::size_t idx : stays_of[pid]) {
            stays[idx].split = tag;
            ++assigned;
        }
    }
}

}  // namespace vitaltext::vitals
