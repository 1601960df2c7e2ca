#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vitaltext/numkit/param_store.hpp"

namespace vitaltext::numkit {

// Finite-difference gradient check. The loss function must be a
// deterministic scalar function of the parameters currently in the store
// (any RNG it uses must be re-seeded inside the closure).
struct GradCheckReport {
    struct SlotReport {
        std::string name;
        double max_rel_err = 0.0;
        double max_abs_err = 0.0;
    };
    std::vector<SlotReport> slots;
    double worst_rel_err = 0.0;

    bool ok(double tol) const { return worst_rel_err < tol; }

    std::vector<std::string> flagged(double tol) const {
        std::vector<std::string> out;
        for (const auto& s : slots) {
            if (s.max_rel_err >= tol) out.push_back(s.name);
        }
        return out;
    }
};

// Compares the analytic gradients already accumulated in `params` against
// central differences (f(p+eps) - f(p-eps)) / (2 eps), entry by entry.
// Relative error uses |a - n| / max(|a| + |n|, 1e-8) so a multiplicative
// fault is flagged even when gradient entries are small.
inline GradCheckReport grad_check(ParamStore& params, const std::function<double()>& loss,
                                  double eps = 1e-4) {
    GradCheckReport report;
    for (std::size_t si = 0; si < params.slot_count(); ++si) {
        auto& slot = params.slot_at(si);
        GradCheckReport::SlotReport sr;
        sr.name = slot.name;
        const Matrix analytic = slot.grad;  // snapshot; loss() may not touch grads
        for (std::size_t i = 0; i < slot.value.size(); ++i) {
            double& p = slot.value.raw()[i];
            const double saved = p;
            p = saved + eps;
            const double f_plus = loss();
            p = saved - eps;
            const double f_minus = loss();
            p = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            const double a = analytic.raw()[i];
            const double abs_err = std::fabs(a - numeric);
            const double rel_err = abs_err / std::max(std::fabs(a) + std::fabs(numeric), 1e-8);
            sr.max_abs_err = std::max(sr.max_abs_err, abs_err);
            sr.max_rel_err = std::max(sr.max_rel_err, rel_err);
        }
        report.worst_rel_err = std::max(report.worst_rel_err, sr.max_rel_err);
        report.slots.push_back(std::move(sr));
    }
    return report;
}

}  // namespace vitaltext::numkit
