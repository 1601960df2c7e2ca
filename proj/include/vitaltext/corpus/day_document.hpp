#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitaltext/corpus/note_event.hpp"
#include "vitaltext/corpus/text.hpp"
#include "vitaltext/log.hpp"

namespace vitaltext::corpus {

struct DayDocument {
    std::int64_t stay_id = 0;
    int day = 0;  // 0 or 1
    std::vector<std::string> tokens;
};

// Aggregate a stay's notes into its two day-documents. Discharge notes are
// excluded entirely; timestamped notes fall into 24 h half-open bins;
// date-only notes are assigned by chartdate and ordered after timestamped
// ones (their content is only known at the end of the day). Anything outside
// the 48 h window is dropped.
inline std::array<DayDocument, 2> aggregate_daily(const std::vector<NoteEvent>& notes,
                                                  std::int64_t stay_id) {
    struct Piece {
        double time;
        std::size_t order;
        const std::string* text;
    };
    std::array<std::vector<Piece>, 2> per_day;

    auto is_discharge = [](const std::string& category) {
        std::string lower;
        lower.reserve(category.size());
        for (char c : category) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        return lower == "discharge";
    };

    for (std::size_t i = 0; i < notes.size(); ++i) {
        const NoteEvent& n = notes[i];
        if (is_discharge(n.category)) continue;
        int day = -1;
        double time = 0.0;
        if (n.charttime) {
            double t = *n.charttime;
            if (t >= 0.0 && t < 24.0) day = 0;
            else if (t >= 24.0 && t < 48.0) day = 1;
            time = t;
        } else if (n.chartdate) {
            if (*n.chartdate == 0 || *n.chartdate == 1) day = *n.chartdate;
            time = std::numeric_limits<double>::infinity();  // sorts after timestamped notes
        }
        if (day < 0) {
            log::debug("dropping note outside 48h window (stay " + std::to_string(stay_id) + ")");
            continue;
        }
        per_day[static_cast<std::size_t>(day)].push_back({time, i, &n.text});
    }

    std::array<DayDocument, 2> out;
    for (int day = 0; day < 2; ++day) {
        auto& pieces = per_day[static_cast<std::size_t>(day)];
        std::stable_sort(pieces.begin(), pieces.end(),
                         [](const Piece& a, const Piece& b) { return a.time < b.time; });
        std::string text;
        for (const Piece& p : pieces) {
            if (!text.empty()) text.push_back(' ');
            text += *p.text;
        }
        out[static_cast<std::size_t>(day)] =
            DayDocument{stay_id, day, normalize_numbers(tokenize(text))};
    }
    return out;
}

inline nlohmann::json to_json(const DayDocument& d) {
    return {{"stay_id", d.stay_id}, {"day", d.day}, {"tokens", d.tokens}};
}

inline DayDocument day_document_from_json(const nlohmann::json& j) {
    DayDocument d;
    d.stay_id = j.at("stay_id").get<std::int64_t>();
    d.day = j.at("day").get<int>();
    d.tokens = j.at("tokens").get<std::vector<std::string>>();
    return d;
}

inline void write_day_documents(const std::string& path, const std::vector<DayDocument>& docs) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const auto& d : docs) out << to_json(d).dump() << "\n";
}

inline std::vector<DayDocument> read_day_documents(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    std::vector<DayDocument> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            docs.push_back(day_document_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return docs;
}

}  // namespace vitaltext::corpus
