#include <catch_amalgamated.hpp>

#include <random>

#include "margin_mine/margin_mine.hpp"

using namespace margin_mine;

namespace {

std::vector<SentenceId>
src_ids(std::initializer_list<const char*> keys) {
    std::vector<SentenceId> out;
    for (auto k : keys) {
        out.push_back({Side::Source, k});
    }
    return out;
}

CandidatePair
pair_of(const std::string& s, const std::string& t, double score = 1.0, Channel c = Channel::Original) {
    return {{Side::Source, s}, {Side::Target, t}, score, c};
}

PairSet
random_set(std::mt19937& rng, int universe, int n) {
    std::uniform_int_distribution<int> pick(0, universe - 1);
    std::uniform_real_distribution<double> score(0.5, 2.0);
    PairSet out;
    for (int i = 0; i < n; ++i) {
        out.insert(pair_of("s" + std::to_string(pick(rng)), "t" + std::to_string(pick(rng)), score(rng)));
    }
    return out;
}

std::set<PairKey>
key_set(const PairSet& p) {
    auto k = p.keys();
    return {k.begin(), k.end()};
}

}  // namespace

TEST_CASE("unit rows with distinct ids are accepted unchanged") {
    std::vector<float> v{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1};
    auto set = validate_embedding_set(4, v, src_ids({"a", "b", "c"}));
    CHECK(set.size() == 3);
    CHECK(set.dim() == 4);
    CHECK(std::vector<float>(set.values().begin(), set.values().end()) == v);
}

TEST_CASE("rows are scaled to unit norm") {
    auto set = validate_embedding_set(4, {2, 0, 0, 0}, src_ids({"a"}));
    CHECK(set.row(0)[0] == 1.0f);
    CHECK(set.row(0)[1] == 0.0f);
}

TEST_CASE("invalid embedding matrices are rejected") {
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        FAIL("no error raised");
        return ErrorCode::IoError;
    };
    CHECK(code_of([] { validate_embedding_set(4, {0, 0, 0, 0}, src_ids({"a"})); }) == ErrorCode::DegenerateVector);
    CHECK(code_of([] { validate_embedding_set(2, {1, NAN}, src_ids({"a"})); }) == ErrorCode::NonFinite);
    CHECK(code_of([] { validate_embedding_set(2, {1, INFINITY}, src_ids({"a"})); }) == ErrorCode::NonFinite);
    CHECK(code_of([] { validate_embedding_set(2, {1, 0, 0}, src_ids({"a"})); }) == ErrorCode::DimensionMismatch);
    CHECK(code_of([] { validate_embedding_set(0, {}, {}); }) == ErrorCode::DimensionMismatch);
    CHECK(code_of([] { validate_embedding_set(1, {1, 1}, src_ids({"a", "a"})); }) == ErrorCode::IdMismatch);
    CHECK(code_of([] {
              validate_embedding_set(1, {1, 1}, {{Side::Source, "a"}, {Side::Target, "b"}});
          }) == ErrorCode::IdMismatch);
}

TEST_CASE("validation is idempotent bit for bit") {
    std::mt19937 rng(7);
    std::normal_distribution<float> normal(0.0f, 3.0f);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t dim = 1 + trial % 40;
        const std::size_t n = 1 + trial % 9;
        std::vector<float> v(n * dim);
        for (auto& x : v) {
            x = normal(rng);
        }
        v[0] += 0.5f;  // keep rows away from zero
        std::vector<SentenceId> ids;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back({Side::Source, "k" + std::to_string(i)});
        }
        try {
            auto once = validate_embedding_set(dim, v, ids);
            auto twice = validate_embedding_set(dim, {once.values().begin(), once.values().end()}, ids);
            REQUIRE(once == twice);
            for (std::size_t i = 0; i < n; ++i) {
                double sq = 0;
                for (float x : once.row(i)) {
                    sq += double(x) * x;
                }
                CHECK(std::sqrt(sq) == Catch::Approx(1.0).margin(1e-6));
            }
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateVector);
        }
    }
}

TEST_CASE("key ranks follow ascending key order") {
    auto set = validate_embedding_set(1, {1, 1, 1}, src_ids({"b", "c", "a"}));
    CHECK(set.key_rank(0) == 1);
    CHECK(set.key_rank(1) == 2);
    CHECK(set.key_rank(2) == 0);
    std::vector<std::size_t> rows{1, 2};
    auto sub = set.subset(rows);
    CHECK(sub.size() == 2);
    CHECK(sub.id(0).key == "c");
    CHECK(sub.key_rank(0) == 1);
    CHECK(sub.key_rank(1) == 0);
}

TEST_CASE("pair set intersect and union on small fixtures") {
    PairSet a;
    a.insert(pair_of("s1", "t1"));
    PairSet b;
    b.insert(pair_of("s1", "t1"));
    b.insert(pair_of("s2", "t2"));
    auto i = pair_set_algebra(a, b, SetOp::Intersect);
    CHECK(key_set(i) == std::set<PairKey>{{"s1", "t1"}});

    auto u = pair_set_algebra(a, PairSet{}, SetOp::Union);
    CHECK(key_set(u) == std::set<PairKey>{{"s1", "t1"}});
}

TEST_CASE("colliding keys keep the larger score") {
    PairSet a;
    a.insert(pair_of("s1", "t1", 1.2));
    PairSet b;
    b.insert(pair_of("s1", "t1", 1.3));
    for (auto op : {SetOp::Intersect, SetOp::Union}) {
        auto r = pair_set_algebra(a, b, op);
        REQUIRE(r.size() == 1);
        // Independent fold: max over every occurrence of the key.
        double expected = -INFINITY;
        for (const PairSet* s : {&a, &b}) {
            for (const auto& [_, p] : *s) {
                expected = std::max(expected, p.score);
            }
        }
        CHECK(r.begin()->second.score == expected);
        CHECK(expected == 1.3);
    }
}

TEST_CASE("merging pairs from different channels marks them combined") {
    PairSet a;
    a.insert(pair_of("s1", "t1", 1.0, Channel::EnToXx));
    a.insert(pair_of("s1", "t1", 0.5, Channel::XxToEn));
    CHECK(a.size() == 1);
    CHECK(a.begin()->second.channel == Channel::Combined);
    CHECK(a.begin()->second.score == 1.0);

    PairSet same;
    same.insert(pair_of("s1", "t1", 1.0, Channel::EnToXx));
    same.insert(pair_of("s1", "t1", 2.0, Channel::EnToXx));
    CHECK(same.begin()->second.channel == Channel::EnToXx);
}

TEST_CASE("pair sets reject reversed orientation and non-finite scores") {
    PairSet a;
    CHECK_THROWS_AS(a.insert({{Side::Target, "t"}, {Side::Source, "s"}, 1.0, Channel::Original}), Error);
    CHECK_THROWS_AS(a.insert(pair_of("s", "t", NAN)), Error);
}

TEST_CASE("set algebra cardinality and algebraic laws on random sets") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = random_set(rng, 12, trial % 40);
        auto b = random_set(rng, 12, (trial * 7) % 40);
        auto c = random_set(rng, 12, (trial * 3) % 40);
        auto ab_i = intersect(a, b);
        auto ab_u = unite(a, b);
        CHECK(ab_i.size() <= std::min(a.size(), b.size()));
        CHECK(ab_u.size() == a.size() + b.size() - ab_i.size());

        CHECK(key_set(ab_i) == key_set(intersect(b, a)));
        CHECK(key_set(ab_u) == key_set(unite(b, a)));
        CHECK(key_set(intersect(ab_i, c)) == key_set(intersect(a, intersect(b, c))));
        CHECK(key_set(unite(ab_u, c)) == key_set(unite(a, unite(b, c))));
        // Scores are max folds, so they are order-independent too.
        CHECK(intersect(ab_i, c) == intersect(a, intersect(b, c)));
        CHECK(unite(ab_u, c) == unite(a, unite(b, c)));
    }
}

TEST_CASE("channel names round trip") {
    for (auto c : {Channel::Original, Channel::EnToXx, Channel::XxToEn, Channel::Combined}) {
        CHECK(parse_channel(channel_name(c)) == c);
    }
    CHECK_FALSE(parse_channel("bogus").has_value());
}

TEST_CASE("mining configuration validation") {
    MiningConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.k = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.k = 4;
    cfg.threshold = NAN;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.threshold = INFINITY;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("error codes map to the right exit class") {
    CHECK(is_configuration_error(ErrorCode::InvalidConfig));
    CHECK(is_configuration_error(ErrorCode::MissingChannel));
    CHECK_FALSE(is_configuration_error(ErrorCode::FormatError));
    CHECK(Error(ErrorCode::EmptyPool, "x").code() == ErrorCode::EmptyPool);
}
