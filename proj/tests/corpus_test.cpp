#include "greenprompt/corpus.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace greenprompt;
using testutil::TempDir;

namespace {

std::string lines(std::initializer_list<const char*> rows) {
    std::string out;
    for (const char* row : rows) {
        out += row;
        out += '\n';
    }
    return out;
}

std::vector<Snippet> tiny_corpus(std::size_t n) {
    std::vector<Snippet> corpus;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string k = std::to_string(i);
        corpus.push_back({"s" + k, "class C" + k + " {", " int", "int field" + k + ";"});
    }
    return corpus;
}

} // namespace

TEST_SUITE("corpus") {

TEST_CASE("loads valid lines in file order") {
    TempDir tmp;
    const auto path = tmp.write(
        "corpus.jsonl",
        lines({R"({"id":"a","context":"class A {","incomplete":" int","ground_truth":"int x;"})",
               R"({"id":"b","context":"class B {","incomplete":"","ground_truth":"int y;"})",
               R"({"id":"c","context":"class C {","incomplete":" void","ground_truth":"void f() {}"})"}));

    const auto corpus = load_corpus(path);
    REQUIRE(corpus.size() == 3);
    CHECK(corpus[0].id == "a");
    CHECK(corpus[1].id == "b");
    CHECK(corpus[1].incomplete.empty());
    CHECK(corpus[2].ground_truth == "void f() {}");
}

TEST_CASE("empty file yields empty corpus") {
    TempDir tmp;
    const auto path = tmp.write("empty.jsonl", "");
    CHECK(load_corpus(path).empty());
}

TEST_CASE("blank lines are skipped") {
    TempDir tmp;
    const auto path = tmp.write(
        "gaps.jsonl",
        "\n" R"({"id":"a","context":"c","incomplete":"i","ground_truth":"g"})" "\n\n");
    CHECK(load_corpus(path).size() == 1);
}

TEST_CASE("missing file is an error") {
    TempDir tmp;
    CHECK_THROWS_AS(load_corpus(tmp.file("nope.jsonl")), CorpusError);
}

TEST_CASE("malformed line is rejected with its line number") {
    TempDir tmp;
    const auto path = tmp.write(
        "bad.jsonl",
        lines({R"({"id":"a","context":"c","incomplete":"i","ground_truth":"g"})",
               "{not json"}));
    CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("line 2"), CorpusError);
}

TEST_CASE("missing ground_truth names the line") {
    TempDir tmp;
    const auto path = tmp.write(
        "missing.jsonl",
        lines({R"({"id":"a","context":"c","incomplete":"i","ground_truth":"g"})",
               R"({"id":"b","context":"c","incomplete":"i"})"}));
    CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("line 2"), CorpusError);
}

TEST_CASE("ground_truth empty after trim is rejected") {
    TempDir tmp;
    const auto path = tmp.write(
        "blankgt.jsonl",
        lines({R"({"id":"a","context":"c","incomplete":"i","ground_truth":"  "})"}));
    CHECK_THROWS_AS(load_corpus(path), CorpusError);
}

TEST_CASE("duplicate id is rejected") {
    TempDir tmp;
    const auto path = tmp.write(
        "dup.jsonl",
        lines({R"({"id":"a","context":"c","incomplete":"i","ground_truth":"g"})",
               R"({"id":"a","context":"c2","incomplete":"i2","ground_truth":"g2"})"}));
    CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("duplicate"), CorpusError);
}

TEST_CASE("save then load round-trips every field") {
    TempDir tmp;
    const std::vector<Snippet> corpus = {
        {"s1", "line one\nline two", " tail \"quoted\"", "ground \\ truth"},
        {"s2", "", "", "g"},
        {"s3", "unicode \xC3\xA9", " x", "y"},
    };
    const auto path = tmp.file("roundtrip.jsonl");
    save_corpus(path, corpus);
    CHECK(load_corpus(path) == corpus);
}

TEST_CASE("sample_eval_set is deterministic and complete") {
    const auto corpus = tiny_corpus(5);

    SUBCASE("n equal to corpus size returns every snippet") {
        const auto sample = sample_eval_set(corpus, 5, 99);
        std::set<std::string> ids;
        for (const auto& s : sample) ids.insert(s.id);
        CHECK(ids.size() == 5);
    }

    SUBCASE("same inputs give identical output") {
        const auto a = sample_eval_set(corpus, 3, 7);
        const auto b = sample_eval_set(corpus, 3, 7);
        CHECK(a == b);
    }

    SUBCASE("different seeds may reorder") {
        const auto big = tiny_corpus(50);
        const auto a = sample_eval_set(big, 10, 1);
        const auto b = sample_eval_set(big, 10, 2);
        CHECK(a != b);
    }

    SUBCASE("n larger than corpus is an error") {
        CHECK_THROWS_AS(sample_eval_set(tiny_corpus(2), 3, 1), std::invalid_argument);
    }
}

TEST_CASE("sample_eval_set matches the pinned algorithm") {
    // Independent re-derivation of the documented scheme: SplitMix64 with
    // rejection-sampled bounded draws driving a partial Fisher-Yates.
    const auto corpus = tiny_corpus(10);
    const std::uint64_t seed = 1234;

    std::vector<std::size_t> indices(corpus.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    detail::SplitMix64 rng(seed);
    std::vector<std::string> expected;
    for (std::size_t i = 0; i < 4; ++i) {
        const std::uint64_t j = i + rng.bounded(indices.size() - i);
        std::swap(indices[i], indices[j]);
        expected.push_back(corpus[indices[i]].id);
    }

    const auto sample = sample_eval_set(corpus, 4, seed);
    REQUIRE(sample.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(sample[i].id == expected[i]);
}

TEST_CASE("split_example_pool excludes the eval set") {
    const auto corpus = tiny_corpus(20);
    const auto eval = sample_eval_set(corpus, 8, 5);

    for (std::size_t k : {std::size_t{0}, std::size_t{1}, std::size_t{5}}) {
        const auto split = split_example_pool(corpus, eval, k, 5);
        CHECK(split.eval_set == eval);
        CHECK(split.example_pool.size() == k);
        std::set<std::string> eval_ids;
        for (const auto& s : eval) eval_ids.insert(s.id);
        for (const auto& s : split.example_pool) CHECK(eval_ids.count(s.id) == 0);
    }
}

TEST_CASE("split_example_pool is deterministic and seed-sensitive") {
    const auto corpus = tiny_corpus(40);
    const auto eval = sample_eval_set(corpus, 5, 3);
    const auto a = split_example_pool(corpus, eval, 5, 3);
    const auto b = split_example_pool(corpus, eval, 5, 3);
    CHECK(a.example_pool == b.example_pool);

    const auto c = split_example_pool(corpus, eval, 5, 4);
    CHECK(a.example_pool != c.example_pool);
}

TEST_CASE("split_example_pool rejects an over-drawn pool") {
    const auto corpus = tiny_corpus(6);
    const auto eval = sample_eval_set(corpus, 4, 1);
    CHECK_THROWS_AS(split_example_pool(corpus, eval, 3, 1), std::invalid_argument);
}

TEST_CASE("eval and pool stay disjoint across seeds") {
    const auto corpus = tiny_corpus(30);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto eval = sample_eval_set(corpus, 10, seed);
        const auto split = split_example_pool(corpus, eval, 5, seed);
        std::set<std::string> ids;
        for (const auto& s : eval) ids.insert(s.id);
        for (const auto& s : split.example_pool) {
            CHECK(ids.insert(s.id).second); // insertion fails on overlap
        }
    }
}

TEST_CASE("split_truncated_input reassembles byte-for-byte") {
    SUBCASE("default two tail segments") {
        const std::string raw =
            "package com.lmax.disruptor.support;  import java.util.concurrent.ThreadFactory;"
            " public final";
        const auto [context, incomplete] = split_truncated_input(raw);
        CHECK(context + incomplete == raw);
        CHECK(incomplete == " public final");
    }

    SUBCASE("single tail segment") {
        const auto [context, incomplete] = split_truncated_input("int x = foo();", 1);
        CHECK(context == "int x =");
        CHECK(incomplete == " foo();");
    }

    SUBCASE("fewer segments than requested puts everything in incomplete") {
        const auto [context, incomplete] = split_truncated_input("lonely", 2);
        CHECK(context.empty());
        CHECK(incomplete == "lonely");
    }

    SUBCASE("empty input") {
        const auto [context, incomplete] = split_truncated_input("", 2);
        CHECK(context.empty());
        CHECK(incomplete.empty());
    }

    SUBCASE("preserves internal whitespace runs") {
        const std::string raw = "a  b\t\tc   d";
        const auto [context, incomplete] = split_truncated_input(raw, 2);
        CHECK(context == "a  b");
        CHECK(incomplete == "\t\tc   d");
    }

    SUBCASE("trailing whitespace travels with the tail") {
        const std::string raw = "foo bar  ";
        const auto [context, incomplete] = split_truncated_input(raw, 1);
        CHECK(context + incomplete == raw);
        CHECK(incomplete == " bar  ");
    }
}

TEST_CASE("SplitMix64 matches the reference vectors") {
    // First outputs of the published reference implementation.
    detail::SplitMix64 zero(0);
    CHECK(zero.next() == 0xE220A8397B1DCDAFULL);
    CHECK(zero.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(zero.next() == 0x06C45D188009454FULL);
    CHECK(zero.next() == 0xF88BB8A8724C81ECULL);

    detail::SplitMix64 forty_two(42);
    CHECK(forty_two.next() == 0xBDD732262FEB6E95ULL);
    CHECK(forty_two.next() == 0x28EFE333B266F103ULL);
}

TEST_CASE("bounded draws are unbiased at the boundaries") {
    detail::SplitMix64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const auto v = rng.bounded(3);
        CHECK(v < 3);
    }
    detail::SplitMix64 one(9);
    for (int i = 0; i < 10; ++i) CHECK(one.bounded(1) == 0);
}

} // TEST_SUITE
