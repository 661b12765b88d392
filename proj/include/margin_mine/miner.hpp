#pragma once

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "margin_mine/core.hpp"
#include "margin_mine/job.hpp"
#include "margin_mine/knn.hpp"
#include "margin_mine/parallel.hpp"

namespace margin_mine {

enum class Direction { Forward, Backward };

/// Best candidate for one query. In the forward direction `query` is a
/// source row and `best` a target row; backward swaps the roles.
struct DirectionalMatch {
    std::size_t query = 0;
    std::size_t best = 0;
    double score = 0.0;
    Direction direction = Direction::Forward;

    friend bool
    operator==(const DirectionalMatch&, const DirectionalMatch&) = default;
};

/// Lower bound on the margin denominator.
inline constexpr double kMarginDenominatorFloor = 1e-6;

inline double
ratio_margin(double cos_xy, double mean_x, double mean_y) noexcept {
    const double denom = 0.5 * (mean_x + mean_y);
    return cos_xy / std::max(denom, kMarginDenominatorFloor);
}

/// Ratio margin: cos(x, y) over the average of the two sides' mean top-k
/// neighbor cosines. nn_x holds x's neighbors among the y side and nn_y
/// holds y's neighbors among the x side.
inline double
margin_score(std::span<const float> x, std::span<const float> y, const NeighborList& nn_x,
             const NeighborList& nn_y, std::size_t k, MeanMode mode = MeanMode::Adaptive) {
    return ratio_margin(dot(x, y), mean_topk_cos(nn_x, k, mode), mean_topk_cos(nn_y, k, mode));
}

struct MineStats {
    std::size_t blocks_mined = 0;
    std::size_t blocks_skipped = 0;
    std::size_t forward_matches = 0;
    std::size_t backward_matches = 0;
    std::vector<std::string> warnings;
};

namespace detail {

struct Neighborhoods {
    std::vector<NeighborList> x_to_y;
    std::vector<NeighborList> y_to_x;
    std::vector<double> mean_x;
    std::vector<double> mean_y;
};

inline Neighborhoods
neighborhoods(const EmbeddingSet& xs, const EmbeddingSet& ys, const MiningConfig& cfg,
              std::size_t threads) {
    Neighborhoods n;
    n.x_to_y = knn(xs, ys, cfg.k, threads);
    n.y_to_x = knn(ys, xs, cfg.k, threads);
    n.mean_x.resize(xs.size());
    n.mean_y.resize(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        n.mean_x[i] = mean_topk_cos(n.x_to_y[i], cfg.k, cfg.mean_mode);
    }
    for (std::size_t j = 0; j < ys.size(); ++j) {
        n.mean_y[j] = mean_topk_cos(n.y_to_x[j], cfg.k, cfg.mean_mode);
    }
    return n;
}

inline bool
passes(double score, const MiningConfig& cfg) noexcept {
    return !cfg.threshold || score > *cfg.threshold;
}

inline std::vector<DirectionalMatch>
select_best(const Neighborhoods& n, const EmbeddingSet& xs, const EmbeddingSet& ys,
            const MiningConfig& cfg, Direction direction) {
    const bool forward = direction == Direction::Forward;
    const auto& lists = forward ? n.x_to_y : n.y_to_x;
    const auto& query_mean = forward ? n.mean_x : n.mean_y;
    const auto& cand_mean = forward ? n.mean_y : n.mean_x;
    const EmbeddingSet& candidates = forward ? ys : xs;

    std::vector<DirectionalMatch> out;
    out.reserve(lists.size());
    for (const auto& nl : lists) {
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        bool have = false;
        for (const auto& nb : nl.neighbors) {
            const double s = ratio_margin(nb.cos, query_mean[nl.query], cand_mean[nb.index]);
            if (!have || s > best_score ||
                (s == best_score && candidates.key_rank(nb.index) < candidates.key_rank(best))) {
                best = nb.index;
                best_score = s;
                have = true;
            }
        }
        if (have && passes(best_score, cfg)) {
            out.push_back({nl.query, best, best_score, direction});
        }
    }
    return out;
}

}  // namespace detail

/// One direction of margin-based mining: every query keeps its
/// highest-margin candidate among its k nearest neighbors (ties go to the
/// smaller candidate key) when the score clears the threshold.
inline std::vector<DirectionalMatch>
mine_direction(const EmbeddingSet& src, const EmbeddingSet& tgt, const MiningConfig& cfg,
               Direction direction) {
    cfg.validate();
    if (src.empty() || tgt.empty()) {
        throw Error(ErrorCode::EmptyPool, "mine_direction needs non-empty sides");
    }
    auto n = detail::neighborhoods(src, tgt, cfg, cfg.threads);
    return detail::select_best(n, src, tgt, cfg, direction);
}

/// Pair of rows (x in the query-role set, y in the pool-role set).
struct IndexedPair {
    std::size_t x = 0;
    std::size_t y = 0;
    double score = 0.0;

    friend bool
    operator==(const IndexedPair&, const IndexedPair&) = default;
};

/// Joins forward (x -> y) and backward (y -> x) matches into x/y pairs,
/// sorted by (x, y).
inline std::vector<IndexedPair>
join_matches(const std::vector<DirectionalMatch>& fwd, const std::vector<DirectionalMatch>& bwd,
             JoinMethod join, const EmbeddingSet& xs, const EmbeddingSet& ys) {
    std::vector<IndexedPair> f;
    std::vector<IndexedPair> b;
    f.reserve(fwd.size());
    b.reserve(bwd.size());
    for (const auto& m : fwd) {
        f.push_back({m.query, m.best, m.score});
    }
    for (const auto& m : bwd) {
        b.push_back({m.best, m.query, m.score});
    }
    auto by_key = [](const IndexedPair& a, const IndexedPair& c) {
        return std::tie(a.x, a.y) < std::tie(c.x, c.y);
    };
    std::sort(f.begin(), f.end(), by_key);
    std::sort(b.begin(), b.end(), by_key);

    std::vector<IndexedPair> out;
    switch (join) {
        case JoinMethod::Intersect: {
            std::size_t i = 0;
            std::size_t j = 0;
            while (i < f.size() && j < b.size()) {
                if (by_key(f[i], b[j])) {
                    ++i;
                } else if (by_key(b[j], f[i])) {
                    ++j;
                } else {
                    out.push_back({f[i].x, f[i].y, std::max(f[i].score, b[j].score)});
                    ++i;
                    ++j;
                }
            }
            break;
        }
        case JoinMethod::Union: {
            std::vector<IndexedPair> all;
            all.reserve(f.size() + b.size());
            std::merge(f.begin(), f.end(), b.begin(), b.end(), std::back_inserter(all), by_key);
            for (const auto& p : all) {
                if (!out.empty() && out.back().x == p.x && out.back().y == p.y) {
                    out.back().score = std::max(out.back().score, p.score);
                } else {
                    out.push_back(p);
                }
            }
            break;
        }
        case JoinMethod::MaxScore: {
            std::vector<IndexedPair> all(f);
            all.insert(all.end(), b.begin(), b.end());
            std::sort(all.begin(), all.end(), [&](const IndexedPair& a, const IndexedPair& c) {
                if (a.score != c.score) {
                    return a.score > c.score;
                }
                return std::make_pair(xs.key_rank(a.x), ys.key_rank(a.y)) <
                       std::make_pair(xs.key_rank(c.x), ys.key_rank(c.y));
            });
            std::vector<bool> used_x(xs.size(), false);
            std::vector<bool> used_y(ys.size(), false);
            for (const auto& p : all) {
                if (used_x[p.x] || used_y[p.y]) {
                    continue;
                }
                used_x[p.x] = true;
                used_y[p.y] = true;
                out.push_back(p);
            }
            std::sort(out.begin(), out.end(), by_key);
            break;
        }
    }
    return out;
}

namespace detail {

struct BlockResult {
    std::vector<IndexedPair> pairs;
    std::size_t forward = 0;
    std::size_t backward = 0;
};

inline BlockResult
mine_block(const EmbeddingSet& xs, const EmbeddingSet& ys, const MiningConfig& cfg,
           std::size_t threads) {
    auto n = neighborhoods(xs, ys, cfg, threads);
    auto fwd = select_best(n, xs, ys, cfg, Direction::Forward);
    auto bwd = select_best(n, xs, ys, cfg, Direction::Backward);
    BlockResult r;
    r.forward = fwd.size();
    r.backward = bwd.size();
    r.pairs = join_matches(fwd, bwd, cfg.join, xs, ys);
    return r;
}

}  // namespace detail

/// Runs bidirectional mining with `xs` in the query (X) role and `ys` in the
/// pool (Y) role. Document scope restricts each search to a linked document
/// pair; `x_docs`/`y_docs` give each row's document. Returned indices refer
/// to rows of xs/ys.
inline std::vector<IndexedPair>
mine_rows(const EmbeddingSet& xs, const EmbeddingSet& ys, const std::vector<std::string>& x_docs,
          const std::vector<std::string>& y_docs,
          const std::vector<std::pair<std::string, std::string>>& doc_links, const MiningConfig& cfg,
          MineStats* stats = nullptr) {
    cfg.validate();
    if (cfg.scope == Scope::Global) {
        if (xs.empty() || ys.empty()) {
            if (stats) {
                stats->blocks_skipped++;
                stats->warnings.push_back("global mining skipped: one side has no sentences");
            }
            return {};
        }
        auto r = detail::mine_block(xs, ys, cfg, cfg.threads);
        if (stats) {
            stats->blocks_mined++;
            stats->forward_matches += r.forward;
            stats->backward_matches += r.backward;
        }
        return std::move(r.pairs);
    }

    if (doc_links.empty()) {
        throw Error(ErrorCode::NoDocumentLinks, "document-scoped mining requires document links");
    }
    std::unordered_map<std::string, std::vector<std::size_t>> x_rows;
    std::unordered_map<std::string, std::vector<std::size_t>> y_rows;
    for (std::size_t i = 0; i < x_docs.size(); ++i) {
        x_rows[x_docs[i]].push_back(i);
    }
    for (std::size_t j = 0; j < y_docs.size(); ++j) {
        y_rows[y_docs[j]].push_back(j);
    }

    // Deterministic processing and merge order.
    auto links = doc_links;
    std::sort(links.begin(), links.end());
    links.erase(std::unique(links.begin(), links.end()), links.end());

    std::vector<detail::BlockResult> results(links.size());
    std::vector<std::string> skipped(links.size());
    static const std::vector<std::size_t> kNone;
    parallel_for(links.size(), cfg.threads, [&](std::size_t li) {
        const auto& [xd, yd] = links[li];
        auto xi = x_rows.find(xd);
        auto yi = y_rows.find(yd);
        const auto& xr = xi == x_rows.end() ? kNone : xi->second;
        const auto& yr = yi == y_rows.end() ? kNone : yi->second;
        if (xr.empty() || yr.empty()) {
            skipped[li] = "document pair (" + xd + ", " + yd + ") skipped: " +
                          (xr.empty() ? "first" : "second") + " side has no sentences";
            return;
        }
        auto sub_x = xs.subset(xr);
        auto sub_y = ys.subset(yr);
        auto r = detail::mine_block(sub_x, sub_y, cfg, 1);
        for (auto& p : r.pairs) {
            p.x = xr[p.x];
            p.y = yr[p.y];
        }
        results[li] = std::move(r);
    });

    std::vector<IndexedPair> out;
    for (std::size_t li = 0; li < links.size(); ++li) {
        if (!skipped[li].empty()) {
            if (stats) {
                stats->blocks_skipped++;
                stats->warnings.push_back(skipped[li]);
            }
            continue;
        }
        if (stats) {
            stats->blocks_mined++;
            stats->forward_matches += results[li].forward;
            stats->backward_matches += results[li].backward;
        }
        out.insert(out.end(), results[li].pairs.begin(), results[li].pairs.end());
    }
    // A document may take part in several links; merge duplicates by max.
    std::sort(out.begin(), out.end(), [](const IndexedPair& a, const IndexedPair& b) {
        return std::tie(a.x, a.y) < std::tie(b.x, b.y);
    });
    std::vector<IndexedPair> merged;
    merged.reserve(out.size());
    for (const auto& p : out) {
        if (!merged.empty() && merged.back().x == p.x && merged.back().y == p.y) {
            merged.back().score = std::max(merged.back().score, p.score);
        } else {
            merged.push_back(p);
        }
    }
    return merged;
}

namespace detail {

inline std::vector<std::string>
doc_column(const CorpusSide& side) {
    std::vector<std::string> docs;
    docs.reserve(side.sentences.size());
    for (const auto& s : side.sentences) {
        docs.push_back(s.doc_id);
    }
    return docs;
}

inline std::vector<std::pair<std::string, std::string>>
link_pairs(const std::vector<DocumentLink>& links, bool swapped) {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(links.size());
    for (const auto& l : links) {
        out.emplace_back(swapped ? l.tgt_doc : l.src_doc, swapped ? l.src_doc : l.tgt_doc);
    }
    return out;
}

}  // namespace detail

/// Mines `job` with substitute vectors for either side (translated
/// channels). The vectors must carry the ids of the job's sentences in
/// order. With `swap_roles` the target side plays the query role, and the
/// output is flipped back to (source, target) orientation.
inline PairSet
mine_vectors(const Job& job, const EmbeddingSet& source_vectors, const EmbeddingSet& target_vectors,
             const MiningConfig& cfg, Channel channel, bool swap_roles, MineStats* stats = nullptr) {
    check_embeddings_for(job.source, source_vectors);
    check_embeddings_for(job.target, target_vectors);
    if (!source_vectors.empty() && !target_vectors.empty() &&
        source_vectors.dim() != target_vectors.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "source and target vectors differ in dim");
    }
    const auto src_docs = detail::doc_column(job.source);
    const auto tgt_docs = detail::doc_column(job.target);
    std::vector<IndexedPair> rows;
    if (!swap_roles) {
        rows = mine_rows(source_vectors, target_vectors, src_docs, tgt_docs,
                         detail::link_pairs(job.links, false), cfg, stats);
    } else {
        rows = mine_rows(target_vectors, source_vectors, tgt_docs, src_docs,
                         detail::link_pairs(job.links, true), cfg, stats);
        for (auto& p : rows) {
            std::swap(p.x, p.y);
        }
    }
    PairSet out(std::string(channel_name(channel)));
    for (const auto& p : rows) {
        out.insert({job.source.sentences[p.x].id, job.target.sentences[p.y].id, p.score, channel});
    }
    return out;
}

/// Margin-based bitext mining over a job: forward and backward search per
/// linked document pair (or globally), optional thresholding, then the
/// configured join.
inline PairSet
mine(const Job& job, const MiningConfig& cfg, MineStats* stats = nullptr) {
    return mine_vectors(job, job.source_embeddings, job.target_embeddings, cfg, Channel::Original,
                        false, stats);
}

}  // namespace margin_mine
