#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vitaltext/errors.hpp"

namespace vitaltext::entity {

enum class EntityType : int {
    kCondition = 0,
    kMedication = 1,
    kTest = 2,
    kTreatment = 3,
    kProcedure = 4,
};

inline constexpr int kNumEntityTypes = 5;

inline const char* entity_type_name(EntityType t) {
    switch (t) {
        case EntityType::kCondition: return "condition";
        case EntityType::kMedication: return "medication";
        case EntityType::kTest: return "test";
        case EntityType::kTreatment: return "treatment";
        case EntityType::kProcedure: return "procedure";
    }
    throw DomainError("unknown entity type");
}

inline EntityType entity_type_from_name(const std::string& name) {
    for (int i = 0; i < kNumEntityTypes; ++i) {
        auto t = static_cast<EntityType>(i);
        if (name == entity_type_name(t)) return t;
    }
    throw DataError("unknown entity type name: '" + name + "'");
}

// A contiguous token run [start, end) with a type and a negation flag.
struct EntitySpan {
    std::size_t start = 0;
    std::size_t end = 0;  // exclusive
    EntityType type = EntityType::kCondition;
    bool negated = false;
    std::vector<std::string> surface;

    bool operator==(const EntitySpan& o) const {
        return start == o.start && end == o.end && type == o.type && negated == o.negated &&
               surface == o.surface;
    }
};

// Tag ids: 0 = O, then per type four tags in the order
// B-affirmed, I-affirmed, B-negated, I-negated. 1 + 5*4 = 21 total.
inline constexpr int kOutsideTag = 0;
inline constexpr int kNumTags = 1 + kNumEntityTypes * 4;

inline int tag_id(EntityType type, bool begin, bool negated) {
    return 1 + static_cast<int>(type) * 4 + (negated ? 2 : 0) + (begin ? 0 : 1);
}

struct TagInfo {
    bool outside = true;
    EntityType type = EntityType::kCondition;
    bool begin = false;
    bool negated = false;
};

inline TagInfo tag_info(int tag) {
    if (tag < 0 || tag >= kNumTags) throw DomainError("tag id out of range: " + std::to_string(tag));
    TagInfo info;
    if (tag == kOutsideTag) return info;
    int rest = tag - 1;
    info.outside = false;
    info.type = static_cast<EntityType>(rest / 4);
    info.negated = (rest % 4) >= 2;
    info.begin = (rest % 2) == 0;
    return info;
}

inline std::string tag_name(int tag) {
    TagInfo info = tag_info(tag);
    if (info.outside) return "O";
    std::string s = info.begin ? "B-" : "I-";
    s += entity_type_name(info.type);
    if (info.negated) s += "_neg";
    return s;
}

inline int tag_from_name(const std::string& name) {
    for (int t = 0; t < kNumTags; ++t)
        if (tag_name(t) == name) return t;
    throw DataError("unknown tag name: '" + name + "'");
}

// Decode a tag sequence into spans. Lenient: an I tag that does not continue a
// compatible open span is treated as if it were B.
inline std::vector<EntitySpan> spans_from_tags(const std::vector<int>& tags,
                                               const std::vector<std::string>& tokens = {}) {
    if (!tokens.empty() && tokens.size() != tags.size())
        throw DimensionError("spans_from_tags: " + std::to_string(tokens.size()) + " tokens vs " +
                             std::to_string(tags.size()) + " tags");
    std::vector<EntitySpan> spans;
    bool open = false;
    EntitySpan cur;
    auto close = [&]() {
        if (!open) return;
        if (!tokens.empty())
            cur.surface.assign(tokens.begin() + static_cast<std::ptrdiff_t>(cur.start),
                               tokens.begin() + static_cast<std::ptrdiff_t>(cur.end));
        spans.push_back(cur);
        open = false;
    };
    for (std::size_t i = 0; i < tags.size(); ++i) {
        TagInfo info = tag_info(tags[i]);
        if (info.outside) {
            close();
            continue;
        }
        bool continues = open && !info.begin && info.type == cur.type && info.negated == cur.negated;
        if (continues) {
            cur.end = i + 1;
        } else {
            close();
            open = true;
            cur = EntitySpan{i, i + 1, info.type, info.negated, {}};
        }
    }
    close();
    return spans;
}

// Encode spans back to a tag sequence (spans must be disjoint and in order).
inline std::vector<int> tags_from_spans(std::size_t n_tokens, const std::vector<EntitySpan>& spans) {
    std::vector<int> tags(n_tokens, kOutsideTag);
    for (const auto& sp : spans) {
        if (sp.end > n_tokens || sp.start >= sp.end)
            throw DataError("span out of range while encoding tags");
        for (std::size_t i = sp.start; i < sp.end; ++i) {
            if (tags[i] != kOutsideTag) throw DataError("overlapping spans while encoding tags");
            tags[i] = tag_id(sp.type, i == sp.start, sp.negated);
        }
    }
    return tags;
}

}  // namespace vitaltext::entity
