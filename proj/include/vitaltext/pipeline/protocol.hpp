#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "vitaltext/errors.hpp"
#include "vitaltext/log.hpp"

namespace vitaltext::pipeline {

struct RunResult {
    std::uint64_t seed = 0;  // run index; the trainer mixes it into its master seed
    bool failed = false;
    double val_f1 = 0.0;
    double val_auroc = 0.0;
    double val_auprc = 0.0;
    std::vector<double> train_loss;  // per epoch
};

struct ProtocolResult {
    std::vector<RunResult> runs;
    std::size_t selected = 0;  // index into runs
    const RunResult& selected_run() const { return runs[selected]; }
};

// Train n_seeds independent runs (seed = 0..n_seeds-1) and select the one
// with the highest validation F1; ties go to the lower seed. Runs that throw
// or report failure are excluded from selection. Runs are independent, so
// they may execute on up to `jobs` threads; results are keyed by seed, which
// keeps the outcome identical regardless of scheduling.
inline ProtocolResult run_protocol(const std::function<RunResult(std::uint64_t)>& train_fn,
                                   std::size_t n_seeds, std::size_t jobs = 1) {
    if (n_seeds == 0) throw ConfigError("n_seeds", "protocol needs at least one seed");
    if (jobs == 0) jobs = 1;

    ProtocolResult result;
    result.runs.resize(n_seeds);
    auto run_one = [&](std::size_t i) {
        try {
            result.runs[i] = train_fn(static_cast<std::uint64_t>(i));
        } catch (const std::exception& e) {
            log::warn("run " + std::to_string(i) + " failed: " + e.what());
            result.runs[i] = RunResult{};
            result.runs[i].failed = true;
        }
        result.runs[i].seed = static_cast<std::uint64_t>(i);
    };

    if (jobs == 1 || n_seeds == 1) {
        for (std::size_t i = 0; i < n_seeds; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_seeds) return;
                run_one(i);
            }
        };
        std::vector<std::thread> pool;
        const std::size_t n_threads = std::min(jobs, n_seeds);
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    bool any = false;
    for (std::size_t i = 0; i < n_seeds; ++i) {
        const RunResult& r = result.runs[i];
        if (r.failed) continue;
        if (!any || r.val_f1 > result.runs[result.selected].val_f1) {
            result.selected = i;
            any = true;
        }
    }
    if (!any) throw ProtocolError("all " + std::to_string(n_seeds) + " runs failed");
    return result;
}

}  // namespace vitaltext::pipeline
