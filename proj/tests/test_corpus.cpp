#include "moose/corpus.hpp"
#include "moose/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace moose;
using moose::testing::fixture;
using moose::testing::make_passage;

namespace {

std::string line(const std::string& id, const std::string& role, const std::string& extra = "") {
    return R"({"id":")" + id + R"(","title":"T )" + id + R"(","body":"some words here","role":")" + role + "\"" +
           extra + "}\n";
}

std::size_t word_count(const std::string& s) {
    std::istringstream in(s);
    std::string w;
    std::size_t n = 0;
    while (in >> w) ++n;
    return n;
}

} // namespace

TEST_CASE("role counts over a small file") {
    auto corpus = parse_corpus(line("p1", "background") + line("p2", "background") + line("p3", "survey"));
    auto counts = corpus->role_counts();
    CHECK(counts[Role::Background] == 2);
    CHECK(counts[Role::Inspiration] == 0);
    CHECK(counts[Role::Survey] == 1);
}

TEST_CASE("duplicate ids are rejected by name") {
    try {
        parse_corpus(line("p1", "background") + line("p1", "survey"));
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("p1") != std::string::npos);
    }
}

TEST_CASE("malformed lines report the source line") {
    try {
        parse_corpus(line("p1", "background") + "\n{not json\n", "c.jsonl");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("c.jsonl:3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_corpus(R"({"id":"a","title":"t","body":"b","role":"rumour"})"), ParseError);
    CHECK_THROWS_AS(parse_corpus(R"({"id":"a","title":"t","role":"survey"})"), ParseError);
    CHECK_THROWS_AS(parse_corpus(R"({"id":"a","title":"  ","body":"b","role":"survey"})"), ValidationError);
    CHECK_THROWS_AS(parse_corpus(line("a", "survey", R"(,"date":"2023-02-30")")), ParseError);
    CHECK_NOTHROW(parse_corpus(line("a", "survey", R"(,"date":"2024-02-29")")));
}

TEST_CASE("serialization round-trips") {
    auto corpus = load_corpus(fixture("corpus_small.jsonl"));
    auto again = parse_corpus(serialize_corpus(*corpus));
    CHECK(again->passages() == corpus->passages());
}

TEST_CASE("title lookup orders by id") {
    Corpus c({make_passage("z", "Same", "x", Role::Inspiration), make_passage("a", "Same", "y", Role::Inspiration),
              make_passage("m", "Other", "y", Role::Inspiration)});
    auto hits = c.find_by_title("Same");
    REQUIRE(hits.size() == 2);
    CHECK(hits[0]->id == "a");
    CHECK(hits[1]->id == "z");
    CHECK(c.find_by_title("same").empty());
    CHECK(c.find("m")->title == "Other");
    CHECK(c.find("q") == nullptr);
}

TEST_CASE("chunking arithmetic") {
    auto p = make_passage("p", "t", "a b c d e f g h i j", Role::Background);
    auto chunks = chunk_passage(p, 4);
    REQUIRE(chunks.size() == 3);
    CHECK(word_count(chunks[0].text) == 4);
    CHECK(word_count(chunks[1].text) == 4);
    CHECK(word_count(chunks[2].text) == 2);
    CHECK(chunks[2].index == 2);

    auto short_p = make_passage("s", "t", "  one\ttwo \n three   four ", Role::Background);
    auto one = chunk_passage(short_p, 100);
    REQUIRE(one.size() == 1);
    CHECK(one[0].text == normalize_whitespace(short_p.body));

    CHECK(chunk_passage(make_passage("e", "t", " \n ", Role::Background), 10).empty());
    CHECK_THROWS_AS(chunk_passage(p, 0), ConfigError);
}

TEST_CASE("chunks re-join to the normalized body") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> len(1, 9);
    std::uniform_int_distribution<int> gap(0, 3);
    const char* gaps[] = {" ", "  ", "\n", "\t "};
    for (int trial = 0; trial < 40; ++trial) {
        std::string body;
        std::size_t n_words = trial == 0 ? 1000 : static_cast<std::size_t>(len(rng) * 37);
        for (std::size_t w = 0; w < n_words; ++w) {
            body += std::string(static_cast<std::size_t>(len(rng)), static_cast<char>('a' + w % 26));
            body += gaps[gap(rng)];
        }
        auto p = make_passage("p", "t", body, Role::Background);
        std::size_t size = trial == 0 ? 300 : static_cast<std::size_t>(len(rng) * 11);
        auto chunks = chunk_passage(p, size);
        if (trial == 0) CHECK(chunks.size() == 4);
        std::string joined;
        for (const auto& c : chunks) {
            CHECK(word_count(c.text) <= size);
            if (!joined.empty()) joined += ' ';
            joined += c.text;
        }
        CHECK(joined == normalize_whitespace(body));
        CHECK(chunks.size() == (n_words + size - 1) / size);
    }
}

TEST_CASE("corpus views by mode") {
    auto corpus = testing::make_corpus({make_passage("b1", "B1", "x", Role::Background),
                                        make_passage("b2", "B2", "x", Role::Background),
                                        make_passage("i1", "I1", "x", Role::Inspiration),
                                        make_passage("i2", "I2", "x", Role::Inspiration),
                                        make_passage("i3", "I3", "x", Role::Inspiration)});
    auto standard = select_corpus_view(corpus, CorpusMode::Standard);
    CHECK(standard.background_pool.size() == 2);
    CHECK(standard.inspiration_pool.size() == 3);

    auto randomized = select_corpus_view(corpus, CorpusMode::Randomized);
    CHECK(randomized.background_pool.size() == 3);
    CHECK(randomized.inspiration_pool.size() == 5);
    CHECK(randomized.inspiration_pool.front()->id == "b1");

    auto no_inspiration = testing::make_corpus({make_passage("b1", "B1", "x", Role::Background)});
    CHECK_THROWS_AS(select_corpus_view(no_inspiration, CorpusMode::Randomized), ConfigError);
    CHECK_THROWS_AS(select_corpus_view(no_inspiration, CorpusMode::Standard), ConfigError);
    CHECK(corpus_mode_from_string("randomized") == CorpusMode::Randomized);
    CHECK_THROWS_AS(corpus_mode_from_string("shuffled"), ConfigError);
}

TEST_CASE("dataset-shaped benchmark histograms") {
    auto corpus = load_corpus(fixture("corpus_50.jsonl"));
    auto bench = load_benchmark(fixture("benchmark_50.jsonl"), *corpus);
    CHECK(bench.entries.size() == 50);
    CHECK(bench.warnings.empty());

    auto subjects = subject_histogram(bench);
    CHECK(subjects[Subject::Communication] == 5);
    CHECK(subjects[Subject::Psychology] == 7);
    CHECK(subjects[Subject::HumanResourceManagement] == 8);
    CHECK(subjects[Subject::InformationSystem] == 8);
    CHECK(subjects[Subject::InternationalBusiness] == 5);
    CHECK(subjects[Subject::Management] == 6);
    CHECK(subjects[Subject::Marketing] == 11);

    auto reasoning = reasoning_histogram(bench);
    CHECK(reasoning[Complexity::Easy] == 24);
    CHECK(reasoning[Complexity::Medium] == 17);
    CHECK(reasoning[Complexity::Hard] == 9);
    auto association = association_histogram(bench);
    CHECK(association[Complexity::Easy] == 12);
    CHECK(association[Complexity::Medium] == 25);
    CHECK(association[Complexity::Hard] == 13);
}

TEST_CASE("benchmark reference validation") {
    auto corpus = load_corpus(fixture("corpus_small.jsonl"));
    auto entry = [](const std::string& bg, const std::string& insp, const std::string& date = "2023-05-01",
                    const std::string& id = "X1") {
        return R"({"paper_id":")" + id + R"(","publication_link":"l","publication_date":")" + date +
               R"(","subject":"Marketing","gt_hypothesis":"h","gt_background_passage_id":")" + bg +
               R"(","gt_inspiration_passage_ids":[)" + insp +
               R"(],"reasoning_process":"r","reasoning_complexity":"Easy","association_complexity":"hard"})" + "\n";
    };
    CHECK(parse_benchmark(entry("b01", R"("i01")"), *corpus).entries.size() == 1);
    CHECK_THROWS_AS(parse_benchmark(entry("b99", R"("i01")"), *corpus), ValidationError);
    CHECK_THROWS_AS(parse_benchmark(entry("b01", R"("i99")"), *corpus), ValidationError);
    CHECK_THROWS_AS(parse_benchmark(entry("i01", R"("i02")"), *corpus), ValidationError);
    CHECK_THROWS_AS(parse_benchmark(entry("b01", R"("b02")"), *corpus), ValidationError);
    CHECK_THROWS_AS(parse_benchmark(entry("b01", ""), *corpus), ValidationError);
    CHECK_THROWS_AS(parse_benchmark(entry("b01", R"("i01")") + entry("b02", R"("i01")"), *corpus), ValidationError);
    CHECK_THROWS_AS(parse_benchmark(entry("b01", R"("i01")", "May 2023"), *corpus), ParseError);

    auto old = parse_benchmark(entry("b01", R"("i01")", "2022-12-31"), *corpus);
    REQUIRE(old.warnings.size() == 1);
    CHECK(old.warnings[0].find("X1") != std::string::npos);
}
