#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "vitaltext/errors.hpp"

namespace vitaltext::corpus {

inline constexpr const char* kRareToken = "<rare>";
inline constexpr const char* kNumZeroToken = "0";
inline constexpr std::size_t kDefaultMinCount = 10;

// Token <-> index bijection. Indices are ordered by descending corpus count,
// ties by lexicographic token; the rare bucket always holds the last index of
// a nonempty vocabulary and absorbs every token below min_count. An empty
// corpus yields an empty vocabulary.
class Vocabulary {
  public:
    Vocabulary() = default;

    template <typename DocRange>
    static Vocabulary build(const DocRange& documents, std::size_t min_count = kDefaultMinCount) {
        std::unordered_map<std::string, std::int64_t> counts;
        for (const auto& doc : documents) {
            for (const auto& tok : doc) counts[tok] += 1;
        }
        Vocabulary v;
        if (counts.empty()) return v;

        std::vector<std::pair<std::string, std::int64_t>> kept;
        std::int64_t rare_count = 0;
        for (const auto& [tok, c] : counts) {
            if (static_cast<std::size_t>(c) >= min_count && tok != kRareToken) {
                kept.emplace_back(tok, c);
            } else {
                rare_count += c;
            }
        }
        std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        for (auto& [tok, c] : kept) v.push(tok, c);
        v.push(kRareToken, rare_count);
        v.rare_ = v.tokens_.size() - 1;
        return v;
    }

    std::size_t size() const { return tokens_.size(); }
    bool empty() const { return tokens_.empty(); }
    std::size_t rare_index() const {
        if (empty()) throw DataError("empty vocabulary has no rare index");
        return rare_;
    }

    bool contains(const std::string& tok) const { return index_.count(tok) != 0; }

    std::size_t encode(const std::string& tok) const {
        if (empty()) throw DataError("cannot encode against an empty vocabulary");
        auto it = index_.find(tok);
        return it == index_.end() ? rare_ : it->second;
    }

    const std::string& decode(std::size_t index) const {
        if (index >= tokens_.size()) throw DomainError("vocabulary index out of range");
        return tokens_[index];
    }

    std::int64_t count(std::size_t index) const {
        if (index >= counts_.size()) throw DomainError("vocabulary index out of range");
        return counts_[index];
    }

    std::vector<std::size_t> encode_all(const std::vector<std::string>& tokens) const {
        std::vector<std::size_t> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens) out.push_back(encode(t));
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("cannot open for writing: " + path);
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            out << tokens_[i] << "\t" << counts_[i] << "\n";
        }
    }

    // Reconstruct from (token, count) rows already in index order, e.g. from
    // an embedding model file. Rows of a nonempty vocabulary must end with
    // the rare bucket, mirroring the on-disk format.
    static Vocabulary from_rows(const std::vector<std::pair<std::string, std::int64_t>>& rows) {
        Vocabulary v;
        for (const auto& [tok, count] : rows) v.push(tok, count);
        if (!v.empty()) {
            if (v.tokens_.back() != kRareToken) {
                throw DataError("vocabulary rows must end with " + std::string(kRareToken));
            }
            v.rare_ = v.tokens_.size() - 1;
        }
        return v;
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw MissingFileError(path);
        Vocabulary v;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos) {
                throw DataError(path + ":" + std::to_string(lineno) + ": expected token<TAB>count");
            }
            v.push(line.substr(0, tab), std::stoll(line.substr(tab + 1)));
        }
        if (!v.empty()) {
            if (v.tokens_.back() != kRareToken) {
                throw DataError(path + ": vocabulary must end with " + std::string(kRareToken));
            }
            v.rare_ = v.tokens_.size() - 1;
        }
        return v;
    }

    bool operator==(const Vocabulary& o) const {
        return tokens_ == o.tokens_ && counts_ == o.counts_;
    }

  private:
    void push(const std::string& tok, std::int64_t count) {
        index_[tok] = tokens_.size();
        tokens_.push_back(tok);
        counts_.push_back(count);
    }

    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> tokens_;
    std::vector<std::int64_t> counts_;
    std::size_t rare_ = 0;
};

}  // namespace vitaltext::corpus
