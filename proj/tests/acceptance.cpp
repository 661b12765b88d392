// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Tolerances and sizes are fixed here.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "harness.hpp"
#include "margin_mine/margin_mine.hpp"
#include "oracle.hpp"
#include "synth.hpp"

using namespace margin_mine;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kScoreTolerance = 1e-6;
constexpr double kOracleBudgetSeconds = 30.0;
constexpr double kMinPlantedF1 = 0.99;
constexpr double kPlantedSigma = 0.05;
constexpr std::size_t kPlantedDim = 128;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double
seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool
subset_of(const PairSet& a, const PairSet& b) {
    for (const auto& [k, _] : a) {
        if (!b.contains(k)) {
            return false;
        }
    }
    return true;
}

std::set<PairKey>
keys(const PairSet& p) {
    auto k = p.keys();
    return {k.begin(), k.end()};
}

Outcome
oracle_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    std::size_t jobs = 0;
    std::size_t pairs = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto job = synth::random_job(rng, 300, 32, trial % 4 != 0);
        MiningConfig cfg;
        cfg.k = 4;
        cfg.join = static_cast<JoinMethod>(trial % 3);
        cfg.scope = trial % 4 == 0 ? Scope::Global : Scope::Document;
        if (trial % 2 == 1) {
            cfg.threshold = 1.06;
        }
        const auto engine = oracle::as_result(mine(job, cfg));
        const auto expected = oracle::mine(job, cfg);
        std::string why;
        if (!oracle::equivalent(engine, expected, kScoreTolerance, &why)) {
            return {false, "job " + std::to_string(trial) + ": " + why};
        }
        jobs++;
        pairs += engine.size();
    }
    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu jobs, %zu pairs, identical keys, scores within %.0e, %.2f s (limit %.0f s)",
                  jobs, pairs, kScoreTolerance, secs, kOracleBudgetSeconds);
    return {secs < kOracleBudgetSeconds, buf};
}

Outcome
planted_recovery() {
    auto planted = synth::planted(10, 100, kPlantedDim, kPlantedSigma, 7);
    MiningConfig cfg;
    cfg.k = 4;
    cfg.join = JoinMethod::Intersect;
    auto r = evaluate(mine(planted.job, cfg), planted.gold);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "10 docs x 100 sentences, dim %zu, sigma %.2f: P=%.4f R=%.4f F1=%.4f (min %.2f)",
                  kPlantedDim, kPlantedSigma, r.precision, r.recall, r.f1, kMinPlantedF1);
    return {r.f1 >= kMinPlantedF1, buf};
}

Outcome
threshold_monotonicity() {
    const std::vector<double> grid{-INFINITY, 1.0, 1.06, 1.2, 1.35, 2.0};
    std::mt19937_64 rng(99);
    std::size_t checks = 0;
    for (int trial = 0; trial < 120; ++trial) {
        auto job = synth::random_job(rng, 80, 16, trial % 3 != 0);
        MiningConfig cfg;
        cfg.join = static_cast<JoinMethod>(trial % 3);
        cfg.scope = trial % 3 == 0 ? Scope::Global : Scope::Document;
        std::optional<PairSet> prev;
        for (double t : grid) {
            cfg.threshold = t;
            auto cur = mine(job, cfg);
            if (prev && !subset_of(cur, *prev)) {
                return {false, "job " + std::to_string(trial) + " not nested at threshold " + std::to_string(t)};
            }
            prev = std::move(cur);
            checks++;
        }
    }
    return {true, "120 jobs x 6 thresholds (" + std::to_string(checks) + " runs), all nested"};
}

Outcome
vote_containment() {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> key(0, 14);
    std::uniform_int_distribution<int> size(0, 60);
    std::uniform_real_distribution<double> score(0.9, 1.6);
    for (int trial = 0; trial < 1000; ++trial) {
        PairSet sets[3];
        std::map<PairKey, int> count;
        for (auto& s : sets) {
            const int n = size(rng);
            for (int i = 0; i < n; ++i) {
                s.insert({{Side::Source, "s" + std::to_string(key(rng))},
                          {Side::Target, "t" + std::to_string(key(rng))},
                          score(rng),
                          Channel::Original});
            }
            for (const auto& [k, _] : s) {
                count[k]++;
            }
        }
        std::set<PairKey> two;
        for (const auto& [k, n] : count) {
            if (n >= 2) {
                two.insert(k);
            }
        }
        auto strict = combine(sets[0], sets[1], sets[2], CombineMode::StrictInt);
        auto pairwise = combine(sets[0], sets[1], sets[2], CombineMode::PairwiseInt);
        auto all = unite(unite(sets[0], sets[1]), sets[2]);
        if (!subset_of(strict, pairwise) || !subset_of(pairwise, all)) {
            return {false, "containment broken on triple " + std::to_string(trial)};
        }
        if (keys(pairwise) != two) {
            return {false, "pairwise differs from the count>=2 oracle on triple " + std::to_string(trial)};
        }
    }
    return {true, "1000 triples: strict <= pairwise <= union, pairwise == count>=2 oracle"};
}

Outcome
evaluation_arithmetic() {
    struct Fixture {
        std::size_t pred, gold, correct;
        double p, r, f1;
    };
    const std::vector<Fixture> fixtures{
        {900, 1000, 850, 850.0 / 900.0, 0.85, 17.0 / 19.0},
        {1000, 1000, 1000, 1.0, 1.0, 1.0},
        {10, 20, 5, 0.5, 0.25, 1.0 / 3.0},
        {0, 5, 0, 0.0, 0.0, 0.0},
        {4, 4, 0, 0.0, 0.0, 0.0},
    };
    for (const auto& f : fixtures) {
        PairSet pred;
        GoldAlignment gold;
        for (std::size_t i = 0; i < f.gold; ++i) {
            gold.emplace("s" + std::to_string(i), "t" + std::to_string(i));
        }
        for (std::size_t i = 0; i < f.pred; ++i) {
            const bool hit = i < f.correct;
            pred.insert({{Side::Source, "s" + std::to_string(i)},
                         {Side::Target, (hit ? "t" : "x") + std::to_string(i)},
                         1.0,
                         Channel::Original});
        }
        auto r = evaluate(pred, gold);
        const bool ok = r.n_pred == f.pred && r.n_gold == f.gold && r.n_correct == f.correct &&
                        std::abs(r.precision - f.p) <= 1e-15 && std::abs(r.recall - f.r) <= 1e-15 &&
                        std::abs(r.f1 - f.f1) <= 1e-15;
        if (!ok) {
            return {false, "fixture " + std::to_string(f.correct) + "/" + std::to_string(f.pred) + "/" +
                               std::to_string(f.gold) + " gave F1 " + std::to_string(r.f1)};
        }
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "5 fixtures exact; 850/900/1000 -> F1 %.12f", 17.0 / 19.0);
    return {true, buf};
}

Outcome
histogram_conservation() {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> score(0.5, 2.5);
    std::size_t fixtures = 0;
    for (std::size_t n : {1, 2, 10, 999, 10000}) {
        PairSet p;
        for (std::size_t i = 0; i < n; ++i) {
            p.insert({{Side::Source, "s" + std::to_string(i)}, {Side::Target, "t"}, score(rng), Channel::Original});
        }
        for (std::size_t bins : {1, 2, 20, 100}) {
            for (int ranged = 0; ranged < 2; ++ranged) {
                auto h = ranged ? histogram(p, bins, std::make_pair(1.0, 2.0)) : histogram(p, bins);
                std::size_t sum = 0;
                for (auto c : h.counts) {
                    sum += c;
                }
                if (sum != p.size() || h.total != p.size() || h.counts.size() != bins) {
                    return {false, std::to_string(n) + " pairs, " + std::to_string(bins) + " bins: sum " +
                                       std::to_string(sum)};
                }
                if (bins == 1 && h.counts[0] != n) {
                    return {false, "single bin holds " + std::to_string(h.counts[0]) + " of " + std::to_string(n)};
                }
                fixtures++;
            }
        }
    }
    return {true, std::to_string(fixtures) + " fixtures, sum of bins == pair count, single bin exact"};
}

Outcome
cli_determinism() {
    harness::TempDir dir("mm_accept");
    auto planted = synth::planted(10, 100, kPlantedDim, kPlantedSigma, 11);
    io::JobPaths paths{dir / "src.jsonl", dir / "tgt.jsonl", dir / "src.emb", dir / "tgt.emb", dir / "links.tsv"};
    io::write_job(paths, planted.job);
    const std::string args = "mine --src-meta " + harness::quote(paths.src_meta) + " --tgt-meta " +
                             harness::quote(paths.tgt_meta) + " --src-emb " + harness::quote(paths.src_emb) +
                             " --tgt-emb " + harness::quote(paths.tgt_emb) + " --links " +
                             harness::quote(*paths.links);
    std::size_t compared = 0;
    for (const char* join : {"intersect", "union", "max-score"}) {
        for (const char* scope : {"doc", "global"}) {
            const std::string cfg = std::string(" --join ") + join + " --scope " + scope;
            const auto one = dir / "one.tsv";
            const auto eight = dir / "eight.tsv";
            if (harness::run(args + cfg + " --threads 1 --out " + harness::quote(one)) != 0 ||
                harness::run(args + cfg + " --threads 8 --out " + harness::quote(eight)) != 0) {
                return {false, std::string("mine failed for ") + join + "/" + scope};
            }
            const auto a = harness::slurp(one);
            if (a.empty() || a != harness::slurp(eight)) {
                return {false, std::string("outputs differ for ") + join + "/" + scope};
            }
            compared++;
        }
    }
    return {true, std::to_string(compared) + " configurations, --threads 1 and 8 byte-identical"};
}

Outcome
performance_smoke() {
    const std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    const auto t_gen = Clock::now();
    auto planted = synth::planted(1000, 100, 768, kPlantedSigma, 13);
    const double gen = seconds_since(t_gen);
    MiningConfig cfg;
    cfg.threads = threads;
    const auto t0 = Clock::now();
    MineStats stats;
    auto pairs = mine(planted.job, cfg, &stats);
    const double secs = seconds_since(t0);
    auto r = evaluate(pairs, planted.gold);
    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "1000 doc pairs x 100 sentences, dim 768, %zu thread(s): mined %zu pairs in %.1f s "
                  "(corpus generation %.1f s), F1 %.4f",
                  threads, pairs.size(), secs, gen, r.f1);
    return {stats.blocks_mined == 1000, buf};
}

}  // namespace

int
main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"planted-pair recovery", planted_recovery},
        {"threshold monotonicity", threshold_monotonicity},
        {"vote-set containment", vote_containment},
        {"evaluation arithmetic", evaluation_arithmetic},
        {"histogram conservation", histogram_conservation},
        {"determinism across thread counts", cli_determinism},
        {"desk-scale performance smoke test", performance_smoke},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
