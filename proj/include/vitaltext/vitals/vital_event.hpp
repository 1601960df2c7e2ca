#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitaltext/errors.hpp"

namespace vitaltext::vitals {

inline constexpr std::size_t kSignals = 17;  // columns of the feature matrix
inline constexpr std::size_t kSteps = 24;    // 48 h window at 2 h per bin
inline constexpr double kWindowHours = 48.0;
inline constexpr double kStepHours = 2.0;

struct VitalEvent {
    std::int64_t stay_id = 0;
    int signal = 0;      // in [0, kSignals)
    double time = 0.0;   // hours since admission
    double value = 0.0;
};

inline nlohmann::json to_json(const VitalEvent& e) {
    return {{"stay_id", e.stay_id}, {"signal", e.signal}, {"time", e.time}, {"value", e.value}};
}

inline VitalEvent vital_event_from_json(const nlohmann::json& j) {
    VitalEvent e;
    e.stay_id = j.at("stay_id").get<std::int64_t>();
    e.signal = j.at("signal").get<int>();
    e.time = j.at("time").get<double>();
    e.value = j.at("value").get<double>();
    if (e.signal < 0 || e.signal >= static_cast<int>(kSignals)) {
        throw DataError("signal index out of range: " + std::to_string(e.signal));
    }
    return e;
}

inline void write_vital_events(const std::string& path, const std::vector<VitalEvent>& events) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const auto& e : events) out << to_json(e).dump() << "\n";
}

inline std::vector<VitalEvent> read_vital_events(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    std::vector<VitalEvent> events;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            events.push_back(vital_event_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return events;
}

}  // namespace vitaltext::vitals
