#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vitaltext/corpus/note_event.hpp"
#include "vitaltext/errors.hpp"
#include "vitaltext/vitals/vital_event.hpp"

namespace vitaltext {

enum class Split { train = 0, val = 1, test = 2 };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    throw DomainError("bad split tag");
}

inline Split split_from_name(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw DataError("unknown split tag: " + s);
}

// One ICU stay: raw events from both modalities plus the label and split tag.
struct StayRecord {
    std::int64_t stay_id = 0;
    std::int64_t patient_id = 0;
    int label = 0;  // in-hospital mortality, {0,1}
    Split split = Split::train;
    std::vector<vitals::VitalEvent> vital_events;
    std::vector<corpus::NoteEvent> notes;
};

}  // namespace vitaltext
