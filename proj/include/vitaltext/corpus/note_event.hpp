#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitaltext/errors.hpp"

namespace vitaltext::corpus {

// One raw note. Exactly one of charttime / chartdate is set: most notes carry
// a timestamp (hours since admission); ecg/echo-style reports only a day index.
struct NoteEvent {
    std::int64_t stay_id = 0;
    std::string category;          // free text; "discharge" is reserved
    std::optional<double> charttime;
    std::optional<int> chartdate;  // 0-based day index
    std::string text;

    bool valid() const { return charttime.has_value() != chartdate.has_value(); }
};

inline nlohmann::json to_json(const NoteEvent& n) {
    nlohmann::json j;
    j["stay_id"] = n.stay_id;
    j["category"] = n.category;
    if (n.charttime) j["charttime"] = *n.charttime;
    if (n.chartdate) j["chartdate"] = *n.chartdate;
    j["text"] = n.text;
    return j;
}

inline NoteEvent note_event_from_json(const nlohmann::json& j) {
    NoteEvent n;
    n.stay_id = j.at("stay_id").get<std::int64_t>();
    n.category = j.at("category").get<std::string>();
    if (j.contains("charttime")) n.charttime = j.at("charttime").get<double>();
    if (j.contains("chartdate")) n.chartdate = j.at("chartdate").get<int>();
    n.text = j.at("text").get<std::string>();
    if (!n.valid()) {
        throw DataError("note event needs exactly one of charttime/chartdate: " + j.dump());
    }
    return n;
}

inline void write_note_events(const std::string& path, const std::vector<NoteEvent>& notes) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const auto& n : notes) out << to_json(n).dump() << "\n";
}

inline std::vector<NoteEvent> read_note_events(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    std::vector<NoteEvent> notes;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            notes.push_back(note_event_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return notes;
}

}  // namespace vitaltext::corpus
