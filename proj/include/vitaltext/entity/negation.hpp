#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vitaltext/corpus/day_document.hpp"
#include "vitaltext/entity/lexicon.hpp"
#include "vitaltext/entity/types.hpp"
#include "vitaltext/errors.hpp"

namespace vitaltext::entity {

// Rule-based negation scope: a trigger phrase negates spans that start within
// `window` tokens after the trigger's last token, unless a terminator token
// intervenes and cuts the scope.
struct NegationConfig {
    std::vector<std::vector<std::string>> triggers;
    std::size_t window = 5;
    std::vector<std::string> terminators = {"but", "however", ".", ";"};

    static NegationConfig defaults() {
        NegationConfig cfg;
        cfg.triggers = {{"no"},          {"not"},        {"denies"},      {"without"},
                        {"negative", "for"}, {"free", "of"}, {"ruled", "out"}};
        return cfg;
    }

    bool is_terminator(const std::string& tok) const {
        return std::find(terminators.begin(), terminators.end(), tok) != terminators.end();
    }
};

// One trigger phrase per line, tokens separated by spaces.
inline std::vector<std::vector<std::string>> load_triggers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    std::vector<std::vector<std::string>> triggers;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::vector<std::string> phrase;
        std::string tok;
        while (ss >> tok) phrase.push_back(tok);
        if (!phrase.empty()) triggers.push_back(std::move(phrase));
    }
    return triggers;
}

inline void save_triggers(const std::string& path, const std::vector<std::vector<std::string>>& triggers) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open trigger file for writing: " + path);
    for (const auto& phrase : triggers) {
        for (std::size_t i = 0; i < phrase.size(); ++i) out << (i ? " " : "") << phrase[i];
        out << '\n';
    }
}

namespace detail {
// True if some trigger phrase ends exactly at token position `end_pos`.
inline bool trigger_ends_at(const std::vector<std::string>& tokens, std::size_t end_pos,
                            const std::vector<std::vector<std::string>>& triggers) {
    for (const auto& phrase : triggers) {
        const std::size_t k = phrase.size();
        if (k == 0 || end_pos + 1 < k) continue;
        std::size_t first = end_pos + 1 - k;
        bool match = true;
        for (std::size_t j = 0; j < k; ++j)
            if (tokens[first + j] != phrase[j]) {
                match = false;
                break;
            }
        if (match) return true;
    }
    return false;
}
}  // namespace detail

inline std::vector<EntitySpan> detect_negation(const std::vector<std::string>& tokens,
                                               std::vector<EntitySpan> spans,
                                               const NegationConfig& cfg = NegationConfig::defaults()) {
    for (auto& sp : spans) {
        sp.negated = false;
        std::size_t lo = sp.start > cfg.window ? sp.start - cfg.window : 0;
        for (std::size_t e = lo; e < sp.start && !sp.negated; ++e) {
            if (!detail::trigger_ends_at(tokens, e, cfg.triggers)) continue;
            bool terminated = false;
            for (std::size_t p = e + 1; p < sp.start; ++p)
                if (cfg.is_terminator(tokens[p])) {
                    terminated = true;
                    break;
                }
            if (!terminated) sp.negated = true;
        }
    }
    return spans;
}

inline std::vector<EntitySpan> filter_negated(const std::vector<EntitySpan>& spans) {
    std::vector<EntitySpan> kept;
    kept.reserve(spans.size());
    for (const auto& sp : spans)
        if (!sp.negated) kept.push_back(sp);
    return kept;
}

// A multi-token entity surface becomes one corpus token.
inline std::string span_token(const EntitySpan& sp) {
    std::string tok;
    for (std::size_t i = 0; i < sp.surface.size(); ++i) {
        if (i) tok += '_';
        tok += sp.surface[i];
    }
    return tok;
}

// Entity documents reuse the day-document shape (stay, day, token list).
using EntityCorpusDoc = corpus::DayDocument;

inline EntityCorpusDoc entity_document(const corpus::DayDocument& doc, const Lexicon& lexicon,
                                       const NegationConfig& cfg = NegationConfig::defaults(),
                                       bool drop_negated = true) {
    std::vector<EntitySpan> spans = detect_negation(doc.tokens, match_entities(doc.tokens, lexicon), cfg);
    if (drop_negated) spans = filter_negated(spans);
    EntityCorpusDoc out;
    out.stay_id = doc.stay_id;
    out.day = doc.day;
    out.tokens.reserve(spans.size());
    for (const auto& sp : spans) out.tokens.push_back(span_token(sp));
    return out;
}

}  // namespace vitaltext::entity
