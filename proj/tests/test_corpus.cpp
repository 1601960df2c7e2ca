#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "vitaltext/corpus/day_document.hpp"
#include "vitaltext/corpus/text.hpp"
#include "vitaltext/corpus/vocabulary.hpp"
#include "vitaltext/numkit/rng.hpp"

using namespace vitaltext;
using namespace vitaltext::corpus;

namespace {

std::filesystem::path tmp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "vitaltext_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("tokenize basics", "[corpus]") {
    CHECK(tokenize("No oropharyngeal lesion.") ==
          std::vector<std::string>{"no", "oropharyngeal", "lesion"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("BP 120/80 mmHg") == std::vector<std::string>{"bp", "120", "80", "mmhg"});
    CHECK(tokenize("dose 12.5 mg!") == std::vector<std::string>{"dose", "12.5", "mg"});
    CHECK(tokenize("a.b") == std::vector<std::string>{"a", "b"});
    CHECK(tokenize("  \t\n ").empty());
    CHECK(tokenize("x2 end.") == std::vector<std::string>{"x2", "end"});
}

TEST_CASE("normalize numbers", "[corpus]") {
    CHECK(normalize_numbers({"hr", "98"}) == std::vector<std::string>{"hr", "0"});
    CHECK(normalize_numbers({"0"}) == std::vector<std::string>{"0"});
    CHECK(normalize_numbers({"12.5", "mg"}) == std::vector<std::string>{"0", "mg"});
    CHECK(normalize_numbers({"b12", "x"}) == std::vector<std::string>{"b12", "x"});
    // idempotence
    std::vector<std::string> toks = {"a", "3.14", "0", "b2"};
    CHECK(normalize_numbers(normalize_numbers(toks)) == normalize_numbers(toks));
}

TEST_CASE("vocabulary construction and min_count boundary", "[corpus]") {
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 10; ++i) docs.push_back({"sepsis"});
    for (int i = 0; i < 9; ++i) docs.push_back({"zebra"});
    for (int i = 0; i < 25; ++i) docs.push_back({"common"});
    auto v = Vocabulary::build(docs, 10);

    REQUIRE(v.contains("sepsis"));
    CHECK_FALSE(v.contains("zebra"));
    CHECK(v.encode("zebra") == v.rare_index());
    CHECK(v.decode(v.encode("sepsis")) == "sepsis");
    // descending count order: common(25) before sepsis(10), rare bucket last
    CHECK(v.encode("common") == 0);
    CHECK(v.encode("sepsis") == 1);
    CHECK(v.rare_index() == 2);
    CHECK(v.count(v.rare_index()) == 9);
}

TEST_CASE("vocabulary tie order is lexicographic and round-trips", "[corpus]") {
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 12; ++i) docs.push_back({"beta", "alpha"});
    auto v = Vocabulary::build(docs, 10);
    CHECK(v.encode("alpha") == 0);
    CHECK(v.encode("beta") == 1);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.encode(v.decode(i)) == i);
}

TEST_CASE("vocabulary order-independence and empty corpus", "[corpus]") {
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 30; ++i) docs.push_back({"aa", "bb", "cc"});
    for (int i = 0; i < 5; ++i) docs.push_back({"dd"});
    auto v1 = Vocabulary::build(docs, 10);
    numkit::Rng rng(4);
    rng.shuffle(docs);
    auto v2 = Vocabulary::build(docs, 10);
    CHECK(v1 == v2);

    std::vector<std::vector<std::string>> empty;
    auto ve = Vocabulary::build(empty, 10);
    CHECK(ve.empty());
    CHECK(ve.size() == 0);
}

TEST_CASE("vocabulary save/load round-trip", "[corpus]") {
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 15; ++i) docs.push_back({"one", "two", "two"});
    docs.push_back({"stray"});
    auto v = Vocabulary::build(docs, 10);
    auto path = tmp_file("vocab.tsv");
    v.save(path.string());
    auto loaded = Vocabulary::load(path.string());
    CHECK(v == loaded);
    CHECK(loaded.rare_index() == v.rare_index());
    std::filesystem::remove(path);
    CHECK_THROWS_AS(Vocabulary::load(path.string()), MissingFileError);
}

TEST_CASE("aggregate_daily windows, discharge exclusion, date-only notes", "[corpus]") {
    std::vector<NoteEvent> notes;
    notes.push_back({7, "nursing", 3.5, std::nullopt, "Alpha note 42"});
    notes.push_back({7, "discharge", 30.0, std::nullopt, "leaky discharge text"});
    notes.push_back({7, "ecg", std::nullopt, 1, "ecg report"});
    notes.push_back({7, "nursing", 25.0, std::nullopt, "beta note"});
    notes.push_back({7, "nursing", 55.0, std::nullopt, "outside window"});
    notes.push_back({7, "radiology", std::nullopt, 5, "late dated report"});

    auto [day0, day1] = aggregate_daily(notes, 7);
    CHECK(day0.stay_id == 7);
    CHECK(day0.day == 0);
    CHECK(day0.tokens == std::vector<std::string>{"alpha", "note", "0"});
    // day 1: timestamped note first, date-only ecg after; discharge and
    // out-of-window content absent everywhere
    CHECK(day1.tokens == std::vector<std::string>{"beta", "note", "ecg", "report"});
    for (const auto& d : {day0, day1}) {
        CHECK(std::find(d.tokens.begin(), d.tokens.end(), "discharge") == d.tokens.end());
        CHECK(std::find(d.tokens.begin(), d.tokens.end(), "outside") == d.tokens.end());
        CHECK(std::find(d.tokens.begin(), d.tokens.end(), "late") == d.tokens.end());
    }
}

TEST_CASE("aggregate_daily orders by time then input order", "[corpus]") {
    std::vector<NoteEvent> notes;
    notes.push_back({1, "a", 10.0, std::nullopt, "second"});
    notes.push_back({1, "b", 2.0, std::nullopt, "first"});
    notes.push_back({1, "c", 10.0, std::nullopt, "third"});  // same time: input order
    auto [day0, day1] = aggregate_daily(notes, 1);
    CHECK(day0.tokens == std::vector<std::string>{"first", "second", "third"});
    CHECK(day1.tokens.empty());
}

TEST_CASE("day documents contain no digit tokens other than zero", "[corpus]") {
    std::vector<NoteEvent> notes;
    notes.push_back({3, "n", 1.0, std::nullopt, "HR 98 BP 120/80 temp 37.2 spo2 99%"});
    auto [day0, day1] = aggregate_daily(notes, 3);
    for (const auto& t : day0.tokens) {
        if (is_number_token(t)) CHECK(t == "0");
    }
}

TEST_CASE("day document file round-trip", "[corpus]") {
    std::vector<DayDocument> docs = {{11, 0, {"alpha", "beta_gamma", "0"}}, {11, 1, {}}};
    auto path = tmp_file("daydocs.jsonl");
    write_day_documents(path.string(), docs);
    auto loaded = read_day_documents(path.string());
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].stay_id == 11);
    CHECK(loaded[0].tokens == docs[0].tokens);
    CHECK(loaded[1].tokens.empty());
    std::filesystem::remove(path);
}

TEST_CASE("note event json validation", "[corpus]") {
    auto j = nlohmann::json{{"stay_id", 1}, {"category", "n"}, {"text", "x"}};
    CHECK_THROWS_AS(note_event_from_json(j), DataError);  // neither time nor date
    j["charttime"] = 1.0;
    CHECK_NOTHROW(note_event_from_json(j));
    j["chartdate"] = 0;
    CHECK_THROWS_AS(note_event_from_json(j), DataError);  // both set
}
