#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitaltext/corpus/note_event.hpp"
#include "vitaltext/errors.hpp"
#include "vitaltext/numkit/activations.hpp"
#include "vitaltext/numkit/rng.hpp"
#include "vitaltext/stay.hpp"
#include "vitaltext/synthgen/lexicon_spec.hpp"
#include "vitaltext/vitals/vital_event.hpp"

namespace vitaltext::synthgen {

struct CohortConfig {
    std::size_t n_patients = 200;
    // stays per patient: 1 + Binomial(max_extra_stays, extra_stay_prob)
    std::size_t max_extra_stays = 2;
    double extra_stay_prob = 0.15;
    double base_rate = 0.25;  // target label prevalence
    double beta_v = 1.0;   // vital effect size
    double beta_t = 0.75;  // text effect size; sized so the full-model AUROC
                           // exceeds the vitals-only ceiling by about 0.05
    std::size_t n_risk_entities = 12;
    std::size_t n_benign_entities = 12;
    std::size_t n_decoys = 2;  // negated decoy sentences per note
    double missingness = 0.3;  // vital events dropped at this rate
    std::uint64_t seed = 1;
};

inline void validate(const CohortConfig& cfg) {
    if (cfg.n_patients == 0) throw ConfigError("n_patients", "must be positive");
    if (cfg.base_rate <= 0.0 || cfg.base_rate >= 1.0)
        throw ConfigError("base_rate", "must be in (0,1)");
    if (cfg.missingness < 0.0 || cfg.missingness > 1.0)
        throw ConfigError("missingness", "must be in [0,1]");
    if (cfg.extra_stay_prob < 0.0 || cfg.extra_stay_prob > 1.0)
        throw ConfigError("extra_stay_prob", "must be in [0,1]");
    if (cfg.beta_v < 0.0) throw ConfigError("beta_v", "must be nonnegative");
    if (cfg.beta_t < 0.0) throw ConfigError("beta_t", "must be nonnegative");
    if (cfg.n_risk_entities == 0) throw ConfigError("n_risk_entities", "must be positive");
    if (cfg.n_benign_entities == 0) throw ConfigError("n_benign_entities", "must be positive");
}

// Intercept alpha such that E[sigmoid(alpha + u)] = base_rate for
// u ~ N(0, beta_v^2 + beta_t^2), by bisection over a trapezoid quadrature of
// the Gaussian expectation. The expectation is strictly increasing in alpha.
inline double solve_alpha(double base_rate, double beta_v, double beta_t) {
    const double s = std::sqrt(beta_v * beta_v + beta_t * beta_t);
    if (s == 0.0) return std::log(base_rate / (1.0 - base_rate));
    auto expected = [&](double alpha) {
        const double dx = 0.01;
        double num = 0.0, den = 0.0;
        for (double x = -8.0; x <= 8.0; x += dx) {
            const double w = std::exp(-0.5 * x * x);
            num += w * numkit::sigmoid(alpha + s * x);
            den += w;
        }
        return num / den;
    };
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (expected(mid) < base_rate)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

// Per-stay generative ground truth; p_true = sigmoid(alpha + bv*z_v + bt*z_t)
// is the Bayes-optimal score given both latents.
struct TruthRecord {
    std::int64_t stay_id = 0;
    std::int64_t patient_id = 0;
    int label = 0;
    double z_v = 0.0;
    double z_t = 0.0;
    double p_true = 0.0;
};

struct GroundTruth {
    double alpha = 0.0;
    std::vector<TruthRecord> records;
};

inline nlohmann::json to_json(const TruthRecord& r) {
    return {{"stay_id", r.stay_id}, {"patient_id", r.patient_id}, {"label", r.label},
            {"z_v", r.z_v},         {"z_t", r.z_t},               {"p_true", r.p_true}};
}

inline TruthRecord truth_record_from_json(const nlohmann::json& j) {
    TruthRecord r;
    r.stay_id = j.at("stay_id").get<std::int64_t>();
    r.patient_id = j.at("patient_id").get<std::int64_t>();
    r.label = j.at("label").get<int>();
    r.z_v = j.at("z_v").get<double>();
    r.z_t = j.at("z_t").get<double>();
    r.p_true = j.at("p_true").get<double>();
    return r;
}

inline void write_ground_truth(const std::string& path, const GroundTruth& truth) {
    nlohmann::json j;
    j["alpha"] = truth.alpha;
    j["records"] = nlohmann::json::array();
    for (const auto& r : truth.records) j["records"].push_back(to_json(r));
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

inline GroundTruth read_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    nlohmann::json j;
    try {
        in >> j;
        GroundTruth truth;
        truth.alpha = j.at("alpha").get<double>();
        for (const auto& rj : j.at("records")) truth.records.push_back(truth_record_from_json(rj));
        return truth;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

struct Cohort {
    std::vector<StayRecord> stays;
    GroundTruth truth;
    LexiconSpec lexicon;
};

namespace detail {

// AR(1) vitals whose linear-in-time drift loads on the vital latent. Every
// random draw happens whether or not the event survives thinning, so the
// kept values do not depend on the missingness draws.
inline void gen_vitals(StayRecord& stay, double z_v, const CohortConfig& cfg, numkit::Rng& rng) {
    constexpr double kRho = 0.75;
    constexpr double kNoise = 1.5;
    constexpr std::size_t kEvents = 32;
    for (int s = 0; s < static_cast<int>(vitals::kSignals); ++s) {
        const double baseline = 60.0 + 5.0 * s;
        const double load = (s % 2 == 0 ? 1.0 : -1.0) * (0.4 + 0.05 * s);
        double x = 0.0;
        for (std::size_t k = 0; k < kEvents; ++k) {
            const double t = 0.5 + 1.5 * static_cast<double>(k);
            x = kRho * x + kNoise * rng.normal();
            const double value = baseline + x + load * z_v * (t / vitals::kWindowHours);
            const bool keep = !rng.bernoulli(cfg.missingness);
            if (keep) stay.vital_events.push_back({stay.stay_id, s, t, value});
        }
    }
}

inline const std::vector<std::string>& filler_vocab() {
    static const std::vector<std::string> words = [] {
        std::vector<std::string> v;
        for (int i = 0; i < 40; ++i) v.push_back("filler" + std::to_string(i));
        return v;
    }();
    return words;
}

constexpr double kMentionBias = -1.5;  // affirmed-mention rate at z_t = 0
constexpr double kMentionSlope = 1.0;
constexpr double kBenignProb = 0.15;

// Charted notes. Sentence order inside a note is affirmed risk mentions,
// benign mentions, negated decoys, then filler; every decoy entity is
// followed by "but", which ends its negation scope before any later mention.
inline void gen_notes(StayRecord& stay, double z_t, const CohortConfig& cfg,
                      const LexiconSpec& lex, numkit::Rng& rng) {
    const auto& fillers = filler_vocab();
    const std::size_t n_charted = 2 + rng.bounded(3);
    for (std::size_t k = 0; k < n_charted; ++k) {
        const double time = rng.uniform(0.0, vitals::kWindowHours);
        std::string text;
        auto sentence = [&text](const std::string& s) {
            if (!text.empty()) text += ". ";
            text += s;
        };
        const double p_mention = numkit::sigmoid(kMentionBias + kMentionSlope * z_t);
        for (const auto& e : lex.risk) {
            if (rng.bernoulli(p_mention)) sentence("patient shows " + e.surface() + " today");
        }
        for (const auto& e : lex.benign) {
            if (rng.bernoulli(kBenignProb)) sentence("exam shows " + e.surface() + " overnight");
        }
        // Decoys reuse the affirmed-sentence scaffolding so that no scaffold
        // word separates them from real mentions, and their count per note is
        // random, so raw-token statistics carry noise that negation filtering
        // removes.
        const std::size_t n_decoys =
            cfg.n_decoys == 0 ? 0 : rng.bounded(static_cast<std::uint32_t>(2 * cfg.n_decoys + 1));
        for (std::size_t d = 0; d < n_decoys; ++d) {
            const auto& e = lex.risk[rng.bounded(static_cast<std::uint32_t>(lex.risk.size()))];
            sentence("patient shows no " + e.surface() + " but stable today");
        }
        const std::size_t n_filler = 2 + rng.bounded(3);
        for (std::size_t f = 0; f < n_filler; ++f) {
            std::string s;
            for (int w = 0; w < 3; ++w) {
                if (!s.empty()) s.push_back(' ');
                s += fillers[rng.bounded(static_cast<std::uint32_t>(fillers.size()))];
            }
            sentence(s);
        }
        corpus::NoteEvent note;
        note.stay_id = stay.stay_id;
        note.category = k % 2 == 0 ? "nursing" : "physician";
        note.charttime = time;
        note.text = text + ".";
        stay.notes.push_back(note);
    }

    if (rng.bernoulli(0.5)) {
        corpus::NoteEvent ecg;
        ecg.stay_id = stay.stay_id;
        ecg.category = "ecg";
        ecg.chartdate = static_cast<int>(rng.bounded(2));
        ecg.text = "ecg sinus rhythm reviewed";
        stay.notes.push_back(ecg);
    }

    // outcome leak, visible only to a pipeline that wrongly keeps discharge notes
    corpus::NoteEvent dc;
    dc.stay_id = stay.stay_id;
    dc.category = "discharge";
    dc.charttime = rng.uniform(24.0, vitals::kWindowHours);
    dc.text = stay.label == 1 ? "final disposition expired" : "final disposition survived";
    stay.notes.push_back(dc);
}

}  // namespace detail

// Pure function of the config: per-patient RNG streams are derived from the
// master seed, so the output is bit-reproducible and independent of any
// parallel scheduling of patients.
inline Cohort generate(const CohortConfig& cfg) {
    validate(cfg);
    Cohort cohort;
    cohort.lexicon = build_lexicon(cfg.n_risk_entities, cfg.n_benign_entities);
    cohort.truth.alpha = solve_alpha(cfg.base_rate, cfg.beta_v, cfg.beta_t);

    for (std::size_t p = 0; p < cfg.n_patients; ++p) {
        numkit::Rng rng(numkit::mix_seed(cfg.seed, p), 0x5b9de);
        const std::int64_t patient_id = 1000 + static_cast<std::int64_t>(p);
        std::size_t n_stays = 1;
        for (std::size_t k = 0; k < cfg.max_extra_stays; ++k)
            n_stays += rng.bernoulli(cfg.extra_stay_prob) ? 1 : 0;
        for (std::size_t s = 0; s < n_stays; ++s) {
            StayRecord stay;
            stay.patient_id = patient_id;
            stay.stay_id = patient_id * 10 + static_cast<std::int64_t>(s);
            const double z_v = rng.normal();
            const double z_t = rng.normal();
            const double p_true =
                numkit::sigmoid(cohort.truth.alpha + cfg.beta_v * z_v + cfg.beta_t * z_t);
            stay.label = rng.bernoulli(p_true) ? 1 : 0;
            detail::gen_vitals(stay, z_v, cfg, rng);
            detail::gen_notes(stay, z_t, cfg, cohort.lexicon, rng);
            cohort.truth.records.push_back(
                {stay.stay_id, patient_id, stay.label, z_v, z_t, p_true});
            cohort.stays.push_back(std::move(stay));
        }
    }
    return cohort;
}

}  // namespace vitaltext::synthgen
