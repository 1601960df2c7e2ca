#pragma once

#include <cctype>
#include <string>
#include <vector>

namespace vitaltext::corpus {

// Lowercase, split on anything that is not a letter or digit, drop the
// punctuation. A decimal point flanked by digits stays inside its token so
// "12.5" survives as one token for number normalization.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    };
    const std::size_t n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (c == '.' && !cur.empty() && std::isdigit(static_cast<unsigned char>(cur.back())) &&
                   i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            cur.push_back('.');
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

// True for tokens made of digits with at most one decimal point.
inline bool is_number_token(const std::string& tok) {
    if (tok.empty()) return false;
    bool seen_dot = false;
    bool seen_digit = false;
    for (char c : tok) {
        if (c == '.') {
            if (seen_dot) return false;
            seen_dot = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            seen_digit = true;
        } else {
            return false;
        }
    }
    return seen_digit;
}

inline std::vector<std::string> normalize_numbers(std::vector<std::string> tokens) {
    for (auto& tok : tokens) {
        if (is_number_token(tok)) tok = "0";
    }
    return tokens;
}

}  // namespace vitaltext::corpus
