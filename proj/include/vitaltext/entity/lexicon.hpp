#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vitaltext/corpus/text.hpp"
#include "vitaltext/entity/types.hpp"
#include "vitaltext/errors.hpp"

namespace vitaltext::entity {

// Surface-form dictionary mapping token phrases to entity types. Phrases are
// stored keyed by their space-joined tokenized form so lookup matches the
// corpus token stream.
class Lexicon {
public:
    void add(const std::string& surface, EntityType type) {
        std::vector<std::string> toks = corpus::tokenize(surface);
        if (toks.empty()) throw DataError("lexicon entry has no tokens: '" + surface + "'");
        std::string key = join(toks);
        auto [it, inserted] = entries_.try_emplace(key, type);
        if (!inserted && it->second != type)
            throw DataError("lexicon entry '" + key + "' listed with two types");
        if (toks.size() > max_len_) max_len_ = toks.size();
    }

    std::size_t size() const { return entries_.size(); }
    std::size_t max_phrase_len() const { return max_len_; }

    bool lookup(const std::string& key, EntityType& type_out) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return false;
        type_out = it->second;
        return true;
    }

    // One entry per line: "surface form<TAB>type".
    static Lexicon load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw MissingFileError(path);
        Lexicon lex;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw DataError(path + ":" + std::to_string(line_no) + ": expected <surface>\\t<type>");
            lex.add(line.substr(0, tab), entity_type_from_name(line.substr(tab + 1)));
        }
        return lex;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot open lexicon file for writing: " + path);
        for (const auto& [key, type] : entries_) out << key << '\t' << entity_type_name(type) << '\n';
    }

    static std::string join(const std::vector<std::string>& toks) {
        std::string key;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (i) key += ' ';
            key += toks[i];
        }
        return key;
    }

private:
    std::map<std::string, EntityType> entries_;
    std::size_t max_len_ = 0;
};

// Greedy longest-match, left to right, over an already-tokenized document.
// Matches never overlap: after a match the scan resumes past its end.
inline std::vector<EntitySpan> match_entities(const std::vector<std::string>& tokens,
                                              const Lexicon& lexicon) {
    std::vector<EntitySpan> spans;
    const std::size_t n = tokens.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t best = 0;
        EntityType best_type = EntityType::kCondition;
        std::size_t cap = std::min(lexicon.max_phrase_len(), n - i);
        std::string key;
        for (std::size_t len = 1; len <= cap; ++len) {
            if (len > 1) key += ' ';
            key += tokens[i + len - 1];
            EntityType t;
            if (lexicon.lookup(key, t)) {
                best = len;
                best_type = t;
            }
        }
        if (best > 0) {
            EntitySpan sp;
            sp.start = i;
            sp.end = i + best;
            sp.type = best_type;
            sp.surface.assign(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                              tokens.begin() + static_cast<std::ptrdiff_t>(i + best));
            spans.push_back(std::move(sp));
            i += best;
        } else {
            ++i;
        }
    }
    return spans;
}

}  // namespace vitaltext::entity
