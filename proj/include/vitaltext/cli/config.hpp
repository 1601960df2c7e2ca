#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vitaltext/doc2vecc/model.hpp"
#include "vitaltext/errors.hpp"
#include "vitaltext/pipeline/tsne.hpp"
#include "vitaltext/synthgen/cohort.hpp"

namespace vitaltext::cli {

// Plain-text key-value config with [section] headers; '#' or ';' start a
// comment line. Entry order is preserved so override echoing and resolved
// config dumps are stable.
class IniFile {
  public:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };

    static IniFile parse(std::istream& in, const std::string& origin) {
        IniFile f;
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']' || t.size() < 3)
                    throw DataError(origin + ":" + std::to_string(lineno) + ": malformed section header");
                section = trim(t.substr(1, t.size() - 2));
                f.section(section);  // create even if empty
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw DataError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty())
                throw DataError(origin + ":" + std::to_string(lineno) + ": empty key");
            f.set(section, key, value);
        }
        return f;
    }

    static IniFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw MissingFileError(path);
        return parse(in, path);
    }

    // Upsert; used both by the parser and by CLI flag overrides.
    void set(const std::string& sec, const std::string& key, const std::string& value) {
        auto& s = section(sec);
        for (auto& [k, v] : s.entries) {
            if (k == key) {
                v = value;
                return;
            }
        }
        s.entries.emplace_back(key, value);
    }

    const std::string* find(const std::string& sec, const std::string& key) const {
        for (const auto& s : sections_) {
            if (s.name != sec) continue;
            for (const auto& [k, v] : s.entries)
                if (k == key) return &v;
        }
        return nullptr;
    }

    const std::vector<Section>& sections() const { return sections_; }

  private:
    static std::string trim(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    Section& section(const std::string& name) {
        for (auto& s : sections_)
            if (s.name == name) return s;
        sections_.push_back({name, {}});
        return sections_.back();
    }

    std::vector<Section> sections_;
};

// One experiment row: data location, feature set / structure, and every
// module hyperparameter. Defaults are the library-scale values; desk-scale
// runs override them from a config file.
struct ExperimentConfig {
    // [run]
    std::string outdir = "out";
    std::string feature_set = "vital";  // vital | vital+note_emb | vital+entity_emb
    std::string structure = "lstm";     // lstm | multimodal
    std::uint64_t master_seed = 1;
    std::size_t n_seeds = 20;
    std::size_t jobs = 1;

    // [cohort]
    synthgen::CohortConfig cohort;

    // [split]
    double f_train = 0.70;
    double f_val = 0.15;
    double f_test = 0.15;
    std::uint64_t split_seed = 13;

    // [entity]
    bool filter_negated = true;

    // [embed]
    doc2vecc::Doc2VecConfig embed;
    std::size_t min_count = 1;
    std::uint64_t embed_seed = 101;

    // [model]
    std::size_t hidden = 256;
    std::size_t text_hidden = 100;
    std::size_t joint_hidden = 300;
    std::string visibility = "from_start";  // from_start | end_of_day
    std::size_t batch_size = 32;
    std::size_t max_epochs = 30;
    std::size_t patience = 5;
    double lr = 1e-4;
    bool use_adam = false;

    // [eval]
    std::size_t n_resamples = 100;
    double threshold = 0.5;
    std::uint64_t eval_seed = 7;

    // [tsne]
    pipeline::TsneConfig tsne;
};

namespace detail {

inline std::uint64_t parse_u64(const std::string& field, const std::string& v) {
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(field, "expected a nonnegative integer, got '" + v + "'");
    }
}

inline double parse_f64(const std::string& field, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(field, "expected a number, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& field, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError(field, "expected a boolean, got '" + v + "'");
}

}  // namespace detail

inline void validate(const ExperimentConfig& cfg) {
    const bool vital = cfg.feature_set == "vital";
    const bool note = cfg.feature_set == "vital+note_emb";
    const bool entity = cfg.feature_set == "vital+entity_emb";
    if (!vital && !note && !entity)
        throw ConfigError("run.feature_set", "must be vital, vital+note_emb, or vital+entity_emb");
    if (cfg.structure != "lstm" && cfg.structure != "multimodal")
        throw ConfigError("run.structure", "must be lstm or multimodal");
    if (vital && cfg.structure == "multimodal")
        throw ConfigError("run.structure", "the vital feature set has no text to fuse");
    if (cfg.n_seeds == 0) throw ConfigError("run.n_seeds", "must be positive");
    if (cfg.jobs == 0) throw ConfigError("run.jobs", "must be positive");
    if (cfg.outdir.empty()) throw ConfigError("run.outdir", "must be nonempty");
    if (cfg.visibility != "from_start" && cfg.visibility != "end_of_day")
        throw ConfigError("model.visibility", "must be from_start or end_of_day");
    synthgen::validate(cfg.cohort);
}

// Strict mapping from INI entries onto the config: every key must be known,
// so typos fail loudly as config errors instead of silently using defaults.
inline ExperimentConfig experiment_from_ini(const IniFile& ini) {
    ExperimentConfig cfg;
    using detail::parse_bool;
    using detail::parse_f64;
    using detail::parse_u64;
    for (const auto& sec : ini.sections()) {
        for (const auto& [key, value] : sec.entries) {
            const std::string field = sec.name + "." + key;
            if (sec.name == "run") {
                if (key == "outdir") cfg.outdir = value;
                else if (key == "feature_set") cfg.feature_set = value;
                else if (key == "structure") cfg.structure = value;
                else if (key == "master_seed") cfg.master_seed = parse_u64(field, value);
                else if (key == "n_seeds") cfg.n_seeds = parse_u64(field, value);
                else if (key == "jobs") cfg.jobs = parse_u64(field, value);
                else throw ConfigError(field, "unknown config key");
            } else if (sec.name == "cohort") {
                if (key == "n_patients") cfg.cohort.n_patients = parse_u64(field, value);
                else if (key == "max_extra_stays") cfg.cohort.max_extra_stays = parse_u64(field, value);
                else if (key == "extra_stay_prob") cfg.cohort.extra_stay_prob = parse_f64(field, value);
                else if (key == "base_rate") cfg.cohort.base_rate = parse_f64(field, value);
                else if (key == "beta_v") cfg.cohort.beta_v = parse_f64(field, value);
                else if (key == "beta_t") cfg.cohort.beta_t = parse_f64(field, value);
                else if (key == "n_risk_entities") cfg.cohort.n_risk_entities = parse_u64(field, value);
                else if (key == "n_benign_entities")
                    cfg.cohort.n_benign_entities = parse_u64(field, value);
                else if (key == "n_decoys") cfg.cohort.n_decoys = parse_u64(field, value);
                else if (key == "missingness") cfg.cohort.missingness = parse_f64(field, value);
                else if (key == "seed") cfg.cohort.seed = parse_u64(field, value);
                else throw ConfigError(field, "unknown config key");
            } else if (sec.name == "split") {
                if (key == "f_train") cfg.f_train = parse_f64(field, value);
                else if (key == "f_val") cfg.f_val = parse_f64(field, value);
                else if (key == "f_test") cfg.f_test = parse_f64(field, value);
                else if (key == "seed") cfg.split_seed = parse_u64(field, value);
                else throw ConfigError(field, "unknown config key");
            } else if (sec.name == "entity") {
                if (key == "filter_negated") cfg.filter_negated = parse_bool(field, value);
                else throw ConfigError(field, "unknown config key");
            } else if (sec.name == "embed") {
                if (key == "dim") cfg.embed.dim = parse_u64(field, value);
                else if (key == "window") cfg.embed.window = parse_u64(field, value);
                else if (key == "negatives") cfg.embed.negatives = parse_u64(field, value);
                else if (key == "corruption") cfg.embed.corruption = parse_f64(field, value);
                else if (key == "subsample") cfg.embed.subsample = parse_f64(field, value);
                else if (key == "epochs") cfg.embed.epochs = parse_u64(field, value);
                else if (key == "lr") cfg.embed.lr = parse_f64(field, value);
                else if (key == "min_count") cfg.min_count = parse_u64(field, value);
                else if (key == "seed") cfg.embed_seed = parse_u64(field, value);
                else throw ConfigError(field, "unknown config key");
            } else if (sec.name == "model") {
                if (key == "hidden") cfg.hidden = parse_u64(field, value);
                else if (key == "text_hidden") cfg.text_hidden = parse_u64(field, value);
                else if (key == "joint_hidden") cfg.joint_hidden = parse_u64(field, value);
                else if (key == "visibility") cfg.visibility = value;
                else if (key == "batch_size") cfg.batch_size = parse_u64(field, value);
                else if (key == "max_epochs") cfg.max_epochs = parse_u64(field, value);
                else if (key == "patience") cfg.patience = parse_u64(field, value);
                else if (key == "lr") cfg.lr = parse_f64(field, value);
                else if (key == "use_adam") cfg.use_adam = parse_bool(field, value);
                else throw ConfigError(field, "unknown config key");
            } else if (sec.name == "eval") {
                if (key == "n_resamples") cfg.n_resamples = parse_u64(field, value);
                else if (key == "threshold") cfg.threshold = parse_f64(field, value);
                else if (key == "seed") cfg.eval_seed = parse_u64(field, value);
                else throw ConfigError(field, "unknown config key");
            } else if (sec.name == "tsne") {
                if (key == "perplexity") cfg.tsne.perplexity = parse_f64(field, value);
                else if (key == "iters") cfg.tsne.iters = parse_u64(field, value);
                else if (key == "lr") cfg.tsne.lr = parse_f64(field, value);
                else if (key == "exaggeration") cfg.tsne.exaggeration = parse_f64(field, value);
                else if (key == "exaggeration_iters")
                    cfg.tsne.exaggeration_iters = parse_u64(field, value);
                else if (key == "momentum_start") cfg.tsne.momentum_start = parse_f64(field, value);
                else if (key == "momentum_final") cfg.tsne.momentum_final = parse_f64(field, value);
                else if (key == "momentum_switch") cfg.tsne.momentum_switch = parse_u64(field, value);
                else if (key == "seed") cfg.tsne.seed = parse_u64(field, value);
                else throw ConfigError(field, "unknown config key");
            } else {
                throw ConfigError(sec.name, "unknown config section");
            }
        }
    }
    validate(cfg);
    return cfg;
}

// Full provenance dump: every field, defaults included, in file syntax.
inline std::string resolved_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "[run]\n"
        << "outdir = " << cfg.outdir << "\n"
        << "feature_set = " << cfg.feature_set << "\n"
        << "structure = " << cfg.structure << "\n"
        << "master_seed = " << cfg.master_seed << "\n"
        << "n_seeds = " << cfg.n_seeds << "\n"
        << "jobs = " << cfg.jobs << "\n"
        << "[cohort]\n"
        << "n_patients = " << cfg.cohort.n_patients << "\n"
        << "max_extra_stays = " << cfg.cohort.max_extra_stays << "\n"
        << "extra_stay_prob = " << cfg.cohort.extra_stay_prob << "\n"
        << "base_rate = " << cfg.cohort.base_rate << "\n"
        << "beta_v = " << cfg.cohort.beta_v << "\n"
        << "beta_t = " << cfg.cohort.beta_t << "\n"
        << "n_risk_entities = " << cfg.cohort.n_risk_entities << "\n"
        << "n_benign_entities = " << cfg.cohort.n_benign_entities << "\n"
        << "n_decoys = " << cfg.cohort.n_decoys << "\n"
        << "missingness = " << cfg.cohort.missingness << "\n"
        << "seed = " << cfg.cohort.seed << "\n"
        << "[split]\n"
        << "f_train = " << cfg.f_train << "\n"
        << "f_val = " << cfg.f_val << "\n"
        << "f_test = " << cfg.f_test << "\n"
        << "seed = " << cfg.split_seed << "\n"
        << "[entity]\n"
        << "filter_negated = " << (cfg.filter_negated ? "true" : "false") << "\n"
        << "[embed]\n"
        << "dim = " << cfg.embed.dim << "\n"
        << "window = " << cfg.embed.window << "\n"
        << "negatives = " << cfg.embed.negatives << "\n"
        << "corruption = " << cfg.embed.corruption << "\n"
        << "subsample = " << cfg.embed.subsample << "\n"
        << "epochs = " << cfg.embed.epochs << "\n"
        << "lr = " << cfg.embed.lr << "\n"
        << "min_count = " << cfg.min_count << "\n"
        << "seed = " << cfg.embed_seed << "\n"
        << "[model]\n"
        << "hidden = " << cfg.hidden << "\n"
        << "text_hidden = " << cfg.text_hidden << "\n"
        << "joint_hidden = " << cfg.joint_hidden << "\n"
        << "visibility = " << cfg.visibility << "\n"
        << "batch_size = " << cfg.batch_size << "\n"
        << "max_epochs = " << cfg.max_epochs << "\n"
        << "patience = " << cfg.patience << "\n"
        << "lr = " << cfg.lr << "\n"
        << "use_adam = " << (cfg.use_adam ? "true" : "false") << "\n"
        << "[eval]\n"
        << "n_resamples = " << cfg.n_resamples << "\n"
        << "threshold = " << cfg.threshold << "\n"
        << "seed = " << cfg.eval_seed << "\n"
        << "[tsne]\n"
        << "perplexity = " << cfg.tsne.perplexity << "\n"
        << "iters = " << cfg.tsne.iters << "\n"
        << "lr = " << cfg.tsne.lr << "\n"
        << "exaggeration = " << cfg.tsne.exaggeration << "\n"
        << "exaggeration_iters = " << cfg.tsne.exaggeration_iters << "\n"
        << "momentum_start = " << cfg.tsne.momentum_start << "\n"
        << "momentum_final = " << cfg.tsne.momentum_final << "\n"
        << "momentum_switch = " << cfg.tsne.momentum_switch << "\n"
        << "seed = " << cfg.tsne.seed << "\n";
    return out.str();
}

}  // namespace vitaltext::cli
