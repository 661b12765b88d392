#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "margin_mine/error.hpp"

namespace margin_mine {

enum class Side : std::uint8_t { Source, Target };

inline std::string_view
side_name(Side side) {
    return side == Side::Source ? "source" : "target";
}

inline bool
is_valid_key(std::string_view key) {
    return !key.empty() && key.find_first_of("\t\n\r") == std::string_view::npos;
}

struct SentenceId {
    Side side = Side::Source;
    std::string key;

    friend bool
    operator==(const SentenceId&, const SentenceId&) = default;
    friend auto
    operator<=>(const SentenceId&, const SentenceId&) = default;
};

struct Sentence {
    SentenceId id;
    std::string text;
    std::string doc_id;
    std::string lang;

    friend bool
    operator==(const Sentence&, const Sentence&) = default;
};

/// Dense unit-length sentence vectors for one corpus side. Rows are
/// renormalized on construction, so a dot product between rows is a cosine.
/// Instances are immutable and safe to share between threads.
class EmbeddingSet {
public:
    EmbeddingSet() = default;

    std::size_t
    dim() const noexcept {
        return dim_;
    }

    std::size_t
    size() const noexcept {
        return ids_.size();
    }

    bool
    empty() const noexcept {
        return ids_.empty();
    }

    std::span<const float>
    row(std::size_t i) const noexcept {
        return {values_.data() + i * dim_, dim_};
    }

    std::span<const float>
    values() const noexcept {
        return values_;
    }

    const std::vector<SentenceId>&
    ids() const noexcept {
        return ids_;
    }

    const SentenceId&
    id(std::size_t i) const noexcept {
        return ids_[i];
    }

    /// Position of row i when all rows are ordered by ascending key.
    std::uint32_t
    key_rank(std::size_t i) const noexcept {
        return key_rank_[i];
    }

    /// Copies the given rows (already normalized) into a new set, keeping
    /// the order of `rows`.
    EmbeddingSet
    subset(std::span<const std::size_t> rows) const {
        EmbeddingSet out;
        out.dim_ = dim_;
        out.values_.reserve(rows.size() * dim_);
        out.ids_.reserve(rows.size());
        for (auto r : rows) {
            auto src = row(r);
            out.values_.insert(out.values_.end(), src.begin(), src.end());
            out.ids_.push_back(ids_[r]);
        }
        out.build_ranks();
        return out;
    }

    friend bool
    operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
        return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.values_ == b.values_;
    }

    friend EmbeddingSet
    validate_embedding_set(std::size_t dim, std::vector<float> values, std::vector<SentenceId> ids);

private:
    void
    build_ranks() {
        std::vector<std::uint32_t> order(ids_.size());
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [this](std::uint32_t a, std::uint32_t b) {
            return ids_[a].key < ids_[b].key;
        });
        key_rank_.assign(ids_.size(), 0);
        for (std::uint32_t pos = 0; pos < order.size(); ++pos) {
            key_rank_[order[pos]] = pos;
        }
    }

    std::size_t dim_ = 0;
    std::vector<float> values_;
    std::vector<SentenceId> ids_;
    std::vector<std::uint32_t> key_rank_;
};

/// Validates a raw row-major matrix and its ids, renormalizing every row to
/// unit length. Rows already within 1e-6 of unit norm are left untouched, so
/// the operation is idempotent bit for bit.
inline EmbeddingSet
validate_embedding_set(std::size_t dim, std::vector<float> values, std::vector<SentenceId> ids) {
    if (dim == 0) {
        throw Error(ErrorCode::DimensionMismatch, "embedding dimension must be >= 1");
    }
    if (values.size() != dim * ids.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "matrix holds " + std::to_string(values.size()) + " values but " +
                        std::to_string(ids.size()) + " ids x dim " + std::to_string(dim) +
                        " were expected");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw Error(ErrorCode::NonFinite,
                        "non-finite value in row " + std::to_string(i / dim));
        }
    }
    std::unordered_set<std::string_view> seen;
    seen.reserve(ids.size());
    for (const auto& id : ids) {
        if (!is_valid_key(id.key)) {
            throw Error(ErrorCode::IdMismatch, "invalid sentence key '" + id.key + "'");
        }
        if (id.side != ids.front().side) {
            throw Error(ErrorCode::IdMismatch, "embedding ids mix source and target sides");
        }
        if (!seen.insert(id.key).second) {
            throw Error(ErrorCode::IdMismatch, "duplicate sentence key '" + id.key + "'");
        }
    }
    for (std::size_t r = 0; r < ids.size(); ++r) {
        float* row = values.data() + r * dim;
        double sq = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            sq += static_cast<double>(row[j]) * row[j];
        }
        double norm = std::sqrt(sq);
        if (norm < 1e-9) {
            throw Error(ErrorCode::DegenerateVector,
                        "row " + std::to_string(r) + " ('" + ids[r].key + "') has zero norm");
        }
        if (std::abs(norm - 1.0) <= 1e-6) {
            continue;
        }
        for (std::size_t j = 0; j < dim; ++j) {
            row[j] = static_cast<float>(row[j] / norm);
        }
    }
    EmbeddingSet out;
    out.dim_ = dim;
    out.values_ = std::move(values);
    out.ids_ = std::move(ids);
    out.build_ranks();
    return out;
}

enum class Channel : std::uint8_t { Original, EnToXx, XxToEn, Combined };

inline std::string_view
channel_name(Channel channel) {
    switch (channel) {
        case Channel::Original:
            return "original";
        case Channel::EnToXx:
            return "en_to_xx";
        case Channel::XxToEn:
            return "xx_to_en";
        case Channel::Combined:
            return "combined";
    }
    return "original";
}

inline std::optional<Channel>
parse_channel(std::string_view name) {
    for (auto c : {Channel::Original, Channel::EnToXx, Channel::XxToEn, Channel::Combined}) {
        if (channel_name(c) == name) {
            return c;
        }
    }
    return std::nullopt;
}

/// A mined pair, always oriented (Source, Target).
struct CandidatePair {
    SentenceId src;
    SentenceId tgt;
    double score = 0.0;
    Channel channel = Channel::Original;

    friend bool
    operator==(const CandidatePair&, const CandidatePair&) = default;
};

using PairKey = std::pair<std::string, std::string>;

/// Pairs keyed by (source key, target key). Iteration order is the key order,
/// which is also the on-disk order.
class PairSet {
public:
    using Map = std::map<PairKey, CandidatePair>;
    using const_iterator = Map::const_iterator;

    PairSet() = default;
    explicit PairSet(std::string provenance) : provenance_(std::move(provenance)) {
    }

    /// Inserts a pair; on key collision keeps the higher score and marks the
    /// channel Combined when the two channels differ.
    void
    insert(CandidatePair pair) {
        if (pair.src.side != Side::Source || pair.tgt.side != Side::Target) {
            throw Error(ErrorCode::InvalidConfig, "pair must be oriented (source, target)");
        }
        if (!std::isfinite(pair.score)) {
            throw Error(ErrorCode::NonFinite,
                        "pair (" + pair.src.key + ", " + pair.tgt.key + ") has a non-finite score");
        }
        PairKey key{pair.src.key, pair.tgt.key};
        auto it = pairs_.find(key);
        if (it == pairs_.end()) {
            pairs_.emplace(std::move(key), std::move(pair));
            return;
        }
        merge_into(it->second, pair);
    }

    bool
    contains(const PairKey& key) const {
        return pairs_.count(key) != 0;
    }

    const CandidatePair*
    find(const PairKey& key) const {
        auto it = pairs_.find(key);
        return it == pairs_.end() ? nullptr : &it->second;
    }

    std::size_t
    size() const noexcept {
        return pairs_.size();
    }

    bool
    empty() const noexcept {
        return pairs_.empty();
    }

    const_iterator
    begin() const noexcept {
        return pairs_.begin();
    }

    const_iterator
    end() const noexcept {
        return pairs_.end();
    }

    const std::string&
    provenance() const noexcept {
        return provenance_;
    }

    void
    set_provenance(std::string provenance) {
        provenance_ = std::move(provenance);
    }

    std::vector<PairKey>
    keys() const {
        std::vector<PairKey> out;
        out.reserve(pairs_.size());
        for (const auto& [key, _] : pairs_) {
            out.push_back(key);
        }
        return out;
    }

    static void
    merge_into(CandidatePair& kept, const CandidatePair& other) {
        if (other.channel != kept.channel) {
            kept.channel = Channel::Combined;
        }
        kept.score = std::max(kept.score, other.score);
    }

    friend bool
    operator==(const PairSet& a, const PairSet& b) {
        return a.pairs_ == b.pairs_;
    }

private:
    Map pairs_;
    std::string provenance_;
};

enum class SetOp { Intersect, Union };

inline PairSet
intersect(const PairSet& a, const PairSet& b) {
    PairSet out(a.provenance() + "&" + b.provenance());
    const PairSet& small = a.size() <= b.size() ? a : b;
    const PairSet& large = a.size() <= b.size() ? b : a;
    for (const auto& [key, pair] : small) {
        if (const auto* other = large.find(key)) {
            CandidatePair merged = pair;
            PairSet::merge_into(merged, *other);
            out.insert(std::move(merged));
        }
    }
    return out;
}

inline PairSet
unite(const PairSet& a, const PairSet& b) {
    PairSet out(a.provenance() + "|" + b.provenance());
    for (const auto& [_, pair] : a) {
        out.insert(pair);
    }
    for (const auto& [_, pair] : b) {
        out.insert(pair);
    }
    return out;
}

inline PairSet
pair_set_algebra(const PairSet& a, const PairSet& b, SetOp op) {
    return op == SetOp::Intersect ? intersect(a, b) : unite(a, b);
}

enum class JoinMethod { Intersect, Union, MaxScore };
enum class Scope { Document, Global };

/// How a neighbor mean is taken when fewer than k neighbors exist.
enum class MeanMode { Adaptive, Strict };

struct MiningConfig {
    std::size_t k = 4;
    JoinMethod join = JoinMethod::Intersect;
    std::optional<double> threshold;
    Scope scope = Scope::Document;
    MeanMode mean_mode = MeanMode::Adaptive;
    std::size_t threads = 1;

    void
    validate() const {
        if (k < 1) {
            throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
        }
        if (threshold && std::isnan(*threshold)) {
            throw Error(ErrorCode::InvalidConfig, "threshold must not be NaN");
        }
        if (threads < 1) {
            throw Error(ErrorCode::InvalidConfig, "threads must be >= 1");
        }
    }
};

inline std::string_view
join_name(JoinMethod join) {
    switch (join) {
        case JoinMethod::Intersect:
            return "intersect";
        case JoinMethod::Union:
            return "union";
        case JoinMethod::MaxScore:
            return "max-score";
    }
    return "intersect";
}

}  // namespace margin_mine
