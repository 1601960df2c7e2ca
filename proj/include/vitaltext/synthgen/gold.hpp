#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vitaltext/entity/negation.hpp"
#include "vitaltext/entity/tagger.hpp"
#include "vitaltext/entity/types.hpp"
#include "vitaltext/numkit/rng.hpp"
#include "vitaltext/synthgen/cohort.hpp"
#include "vitaltext/synthgen/lexicon_spec.hpp"

namespace vitaltext::synthgen {

namespace detail {

inline void append_entity_tags(std::vector<int>& tags, const LexEntry& e, bool negated) {
    for (std::size_t k = 0; k < e.tokens.size(); ++k)
        tags.push_back(entity::tag_id(e.type, k == 0, negated));
}

}  // namespace detail

// Gold BIO(+negation) training corpus for the tagger, consistent with the
// generated lexicon and the default negation triggers: running the lexicon
// matcher plus negation detection over each sentence reproduces exactly the
// spans encoded in the tags. Layout: per risk entity one affirmed and one
// negated sentence (cycling through all trigger phrases), per benign entity
// one affirmed sentence, then 8 all-O filler sentences.
inline std::vector<entity::TaggedSentence> gold_tagged_sentences(const CohortConfig& cfg) {
    validate(cfg);
    LexiconSpec lex = build_lexicon(cfg.n_risk_entities, cfg.n_benign_entities);
    const auto triggers = entity::NegationConfig::defaults().triggers;
    const auto& fillers = detail::filler_vocab();
    numkit::Rng rng(cfg.seed, 0x601d);

    std::vector<entity::TaggedSentence> out;
    for (const auto& e : lex.risk) {
        entity::TaggedSentence affirmed;
        affirmed.words = {"patient", "shows"};
        affirmed.tags = {entity::kOutsideTag, entity::kOutsideTag};
        for (const auto& t : e.tokens) affirmed.words.push_back(t);
        detail::append_entity_tags(affirmed.tags, e, false);
        affirmed.words.push_back("today");
        affirmed.tags.push_back(entity::kOutsideTag);
        out.push_back(std::move(affirmed));

        const auto& trig = triggers[out.size() % triggers.size()];
        entity::TaggedSentence negated;
        negated.words = {"patient"};
        negated.tags = {entity::kOutsideTag};
        for (const auto& t : trig) {
            negated.words.push_back(t);
            negated.tags.push_back(entity::kOutsideTag);
        }
        for (const auto& t : e.tokens) negated.words.push_back(t);
        detail::append_entity_tags(negated.tags, e, true);
        negated.words.push_back("but");
        negated.words.push_back("stable");
        negated.tags.push_back(entity::kOutsideTag);
        negated.tags.push_back(entity::kOutsideTag);
        out.push_back(std::move(negated));
    }
    for (const auto& e : lex.benign) {
        entity::TaggedSentence s;
        s.words = {"exam", "shows"};
        s.tags = {entity::kOutsideTag, entity::kOutsideTag};
        for (const auto& t : e.tokens) s.words.push_back(t);
        detail::append_entity_tags(s.tags, e, false);
        s.words.push_back("overnight");
        s.tags.push_back(entity::kOutsideTag);
        out.push_back(std::move(s));
    }
    for (int f = 0; f < 8; ++f) {
        entity::TaggedSentence s;
        const std::size_t len = 3 + rng.bounded(3);
        for (std::size_t w = 0; w < len; ++w) {
            s.words.push_back(fillers[rng.bounded(static_cast<std::uint32_t>(fillers.size()))]);
            s.tags.push_back(entity::kOutsideTag);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace vitaltext::synthgen
