#include <catch_amalgamated.hpp>

#include <random>

#include "margin_mine/margin_mine.hpp"

using namespace margin_mine;

namespace {

DocPairStats
stats(const std::string& id, std::size_t sw, std::size_t tw, std::size_t ss, std::size_t ts) {
    return {{id, "s_" + id, "t_" + id}, sw, tw, ss, ts};
}

std::vector<DocPairStats>
random_stats(std::mt19937& rng, std::size_t n) {
    std::uniform_int_distribution<std::size_t> sent(1, 40);
    std::vector<DocPairStats> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto ss = sent(rng);
        const auto ts = sent(rng);
        out.push_back(stats("d" + std::to_string(i), ss * 7, ts * 5, ss, ts));
    }
    return out;
}

}  // namespace

TEST_CASE("noise tokens and urls are removed") {
    CleanupConfig cfg = CleanupConfig::all({"href"});
    CHECK(clean_sentence("see href http://x.y z", cfg) == "see z");
}

TEST_CASE("whitespace is collapsed") {
    CleanupConfig cfg;
    cfg.collapse_whitespace = true;
    CHECK(clean_sentence("a   b\t c", cfg) == "a b c");
    CHECK(clean_sentence("  lead and trail  ", cfg) == "lead and trail");
}

TEST_CASE("clean text passes through unchanged") {
    CHECK(clean_sentence("hello", CleanupConfig::all()) == "hello");
    CHECK(clean_sentence("untouched   text", CleanupConfig{}) == "untouched   text");
}

TEST_CASE("url forms") {
    CleanupConfig cfg;
    cfg.strip_urls = true;
    cfg.collapse_whitespace = true;
    CHECK(clean_sentence("go to https://example.org/a?b=c now", cfg) == "go to now");
    CHECK(clean_sentence("visit www.example.com today", cfg) == "visit today");
    CHECK(clean_sentence("ftp://files.example.net", cfg) == "");
}

TEST_CASE("non-standard characters are stripped but letters, marks and digits stay") {
    CleanupConfig cfg;
    cfg.strip_nonstandard_chars = true;
    CHECK(clean_sentence("café शांति 42", cfg) == "café शांति 42");
    CHECK(clean_sentence("a​b\u0007c", cfg) == "abc");
    CHECK(clean_sentence("Қазақстан!", cfg) ==
          "Қазақстан!");
}

TEST_CASE("cleaning is idempotent") {
    std::mt19937 rng(3);
    const std::vector<std::string> pieces{"href", "http://a.b/c", "www.x.org", " ", "\t", "  ", "word",
                                          "été", "​", "\u0007", "hre", "f", ".", "!",
                                          "ગુજ", "https://", "h"};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        for (int i = 0; i < 12; ++i) {
            text += pieces[pick(rng)];
        }
        CleanupConfig cfg;
        cfg.strip_urls = trial % 2 == 0;
        cfg.strip_nonstandard_chars = trial % 3 == 0;
        cfg.collapse_whitespace = trial % 5 != 0;
        if (trial % 4 == 0) {
            cfg.noise_tokens = {"href"};
        }
        const auto once = clean_sentence(text, cfg);
        CHECK(clean_sentence(once, cfg) == once);
    }
}

TEST_CASE("empty noise tokens are rejected") {
    CleanupConfig cfg;
    cfg.noise_tokens = {""};
    CHECK_THROWS_AS(clean_sentence("x", cfg), Error);
}

TEST_CASE("cleaning a corpus drops sentences left empty") {
    CorpusSide side{Side::Source,
                    {{{Side::Source, "a"}, "http://only.url", "d", "en"}, {{Side::Source, "b"}, "keep me", "d", "en"}}};
    auto r = clean_corpus(side, CleanupConfig::all());
    REQUIRE(r.side.sentences.size() == 1);
    CHECK(r.side.sentences[0].id.key == "b");
    CHECK(r.kept_rows == std::vector<std::size_t>{1});
    CHECK(r.dropped_ids == std::vector<std::string>{"a"});
}

TEST_CASE("word counts") {
    CHECK(word_count("") == 0);
    CHECK(word_count("  one  two\tthree\n") == 3);
}

TEST_CASE("short document pairs are dropped by absolute word counts") {
    auto f = DocLengthFilter::absolute_words(30, 8);
    auto r = filter_documents({stats("a", 29, 10, 3, 2), stats("b", 30, 8, 3, 2), stats("c", 40, 7, 3, 2)}, f);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0].link.link_id == "b");
    CHECK(r.dropped.size() == 2);
}

TEST_CASE("zero minimums keep everything") {
    std::mt19937 rng(4);
    auto pairs = random_stats(rng, 50);
    pairs.push_back(stats("empty", 0, 0, 0, 0));
    auto r = filter_documents(pairs, DocLengthFilter::absolute_words(0, 0));
    CHECK(r.kept == pairs);
    CHECK(r.dropped.empty());
}

TEST_CASE("bottom percentile drops exactly floor(p n) shortest pairs") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + trial * 3;
        auto pairs = random_stats(rng, n);
        const double p = (trial % 10) / 10.0 + 0.035;
        auto r = filter_documents(pairs, DocLengthFilter::bottom_percentile(p));
        const auto expected_drop = static_cast<std::size_t>(std::floor(p * double(n)));
        CHECK(r.dropped.size() == expected_drop);
        CHECK(r.kept.size() + r.dropped.size() == n);
        // Every dropped pair is no longer than every kept pair.
        std::size_t max_dropped = 0;
        std::size_t min_kept = SIZE_MAX;
        for (const auto& d : r.dropped) {
            max_dropped = std::max(max_dropped, std::min(d.src_sentences, d.tgt_sentences));
        }
        for (const auto& k : r.kept) {
            min_kept = std::min(min_kept, std::min(k.src_sentences, k.tgt_sentences));
        }
        if (!r.dropped.empty()) {
            CHECK(max_dropped <= min_kept);
        }
        REQUIRE(r.src_cutoff_sentences.has_value());
        REQUIRE(r.tgt_cutoff_sentences.has_value());
    }
}

TEST_CASE("bottom percentile reports per-side cutoffs") {
    std::vector<DocPairStats> pairs;
    for (std::size_t i = 1; i <= 10; ++i) {
        pairs.push_back(stats("d" + std::to_string(i), 10 * i, 3 * i, i, 20 - i));
    }
    auto r = filter_documents(pairs, DocLengthFilter::bottom_percentile(0.3));
    CHECK(r.dropped.size() == 3);
    // Sorted source counts 1..10 and target counts 10..19, taken at position 3.
    CHECK(*r.src_cutoff_sentences == 4);
    CHECK(*r.tgt_cutoff_sentences == 13);
}

TEST_CASE("removing every document is an error") {
    try {
        filter_documents({stats("a", 1, 1, 1, 1)}, DocLengthFilter::absolute_words(5, 5));
        FAIL("expected EmptyCorpus");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyCorpus);
    }
    CHECK_THROWS_AS(filter_documents({}, DocLengthFilter::bottom_percentile(0.5)), Error);
    CHECK_THROWS_AS(filter_documents({stats("a", 1, 1, 1, 1)}, DocLengthFilter::bottom_percentile(1.0)), Error);
}

TEST_CASE("document statistics count words and sentences per link") {
    CorpusSide src{Side::Source,
                   {{{Side::Source, "s1"}, "one two three", "A", "en"},
                    {{Side::Source, "s2"}, "four", "A", "en"},
                    {{Side::Source, "s3"}, "x y", "B", "en"}}};
    CorpusSide tgt{Side::Target, {{{Side::Target, "t1"}, "uno dos", "a", "kk"}}};
    auto st = document_stats(src, tgt, {{"1", "A", "a"}, {"2", "B", "b"}});
    REQUIRE(st.size() == 2);
    CHECK(st[0].src_words == 4);
    CHECK(st[0].src_sentences == 2);
    CHECK(st[0].tgt_words == 2);
    CHECK(st[1].src_words == 2);
    CHECK(st[1].tgt_sentences == 0);
}
