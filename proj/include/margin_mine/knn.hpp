#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "margin_mine/core.hpp"
#include "margin_mine/parallel.hpp"

namespace margin_mine {

/// Dot product accumulated in 16 double lanes. Float products are exact in
/// double and lane i only ever sees a[i]*b[i] terms, so dot(a, b) == dot(b, a)
/// bit for bit.
inline double
dot(const float* a, const float* b, std::size_t n) noexcept {
    constexpr std::size_t kLanes = 16;
    double acc[kLanes] = {};
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        for (std::size_t j = 0; j < kLanes; ++j) {
            acc[j] += static_cast<double>(a[i + j]) * b[i + j];
        }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < kLanes; ++j) {
        sum += acc[j];
    }
    for (; i < n; ++i) {
        sum += static_cast<double>(a[i]) * b[i];
    }
    return sum;
}

inline double
dot(std::span<const float> a, std::span<const float> b) noexcept {
    return dot(a.data(), b.data(), std::min(a.size(), b.size()));
}

struct Neighbor {
    std::size_t index = 0;  // row in the pool
    double cos = 0.0;

    friend bool
    operator==(const Neighbor&, const Neighbor&) = default;
};

/// Nearest pool rows for one query, ordered by (cos desc, pool key asc).
struct NeighborList {
    std::size_t query = 0;  // row in the query set
    std::vector<Neighbor> neighbors;

    std::size_t
    size() const noexcept {
        return neighbors.size();
    }

    bool
    empty() const noexcept {
        return neighbors.empty();
    }
};

namespace detail {

class TopK {
public:
    TopK(std::size_t k, const EmbeddingSet& pool) : k_(k), pool_(&pool) {
        items_.reserve(k + 1);
    }

    bool
    better(const Neighbor& a, const Neighbor& b) const noexcept {
        if (a.cos != b.cos) {
            return a.cos > b.cos;
        }
        return pool_->key_rank(a.index) < pool_->key_rank(b.index);
    }

    void
    offer(std::size_t index, double cos) {
        Neighbor cand{index, cos};
        if (items_.size() == k_ && !better(cand, items_.back())) {
            return;
        }
        auto pos = std::upper_bound(items_.begin(), items_.end(), cand,
                                    [this](const Neighbor& a, const Neighbor& b) { return better(a, b); });
        items_.insert(pos, cand);
        if (items_.size() > k_) {
            items_.pop_back();
        }
    }

    std::vector<Neighbor>
    take() {
        return std::move(items_);
    }

private:
    std::size_t k_;
    const EmbeddingSet* pool_;
    std::vector<Neighbor> items_;
};

}  // namespace detail

/// Exact top-k cosine search of every query row against every pool row.
/// Returns min(k, pool.size()) neighbors per query; ties are broken by
/// ascending pool key, so the result does not depend on pool row order.
inline std::vector<NeighborList>
knn(const EmbeddingSet& queries, const EmbeddingSet& pool, std::size_t k, std::size_t threads = 1) {
    if (k < 1) {
        throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
    }
    if (pool.empty()) {
        throw Error(ErrorCode::EmptyPool, "knn pool is empty");
    }
    if (!queries.empty() && queries.dim() != pool.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "query dim " + std::to_string(queries.dim()) + " != pool dim " +
                        std::to_string(pool.dim()));
    }
    constexpr std::size_t kQueryBlock = 8;
    constexpr std::size_t kPoolTile = 256;
    const std::size_t dim = pool.dim();
    const std::size_t n_queries = queries.size();
    const std::size_t n_pool = pool.size();
    const std::size_t kk = std::min(k, n_pool);

    std::vector<NeighborList> out(n_queries);
    const std::size_t n_blocks = (n_queries + kQueryBlock - 1) / kQueryBlock;
    parallel_for(n_blocks, threads, [&](std::size_t block) {
        const std::size_t q_begin = block * kQueryBlock;
        const std::size_t q_end = std::min(n_queries, q_begin + kQueryBlock);
        std::vector<detail::TopK> heaps;
        heaps.reserve(q_end - q_begin);
        for (std::size_t q = q_begin; q < q_end; ++q) {
            heaps.emplace_back(kk, pool);
        }
        for (std::size_t p_begin = 0; p_begin < n_pool; p_begin += kPoolTile) {
            const std::size_t p_end = std::min(n_pool, p_begin + kPoolTile);
            for (std::size_t p = p_begin; p < p_end; ++p) {
                const float* prow = pool.values().data() + p * dim;
                for (std::size_t q = q_begin; q < q_end; ++q) {
                    const float* qrow = queries.values().data() + q * dim;
                    heaps[q - q_begin].offer(p, dot(qrow, prow, dim));
                }
            }
        }
        for (std::size_t q = q_begin; q < q_end; ++q) {
            out[q].query = q;
            out[q].neighbors = heaps[q - q_begin].take();
        }
    });
    return out;
}

/// Mean cosine of the first min(k, |nl|) neighbors. Adaptive mode divides by
/// that count; strict mode always divides by k.
inline double
mean_topk_cos(const NeighborList& nl, std::size_t k, MeanMode mode = MeanMode::Adaptive) {
    if (nl.empty()) {
        throw Error(ErrorCode::EmptyNeighborList, "neighbor list is empty");
    }
    if (k < 1) {
        throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
    }
    const std::size_t used = std::min(k, nl.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < used; ++i) {
        sum += nl.neighbors[i].cos;
    }
    const double divisor = mode == MeanMode::Strict ? static_cast<double>(k) : static_cast<double>(used);
    return sum / divisor;
}

}  // namespace margin_mine
