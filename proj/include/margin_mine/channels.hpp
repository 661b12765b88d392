#pragma once

#include <array>
#include <map>
#include <optional>

#include "margin_mine/core.hpp"
#include "margin_mine/job.hpp"
#include "margin_mine/miner.hpp"

namespace margin_mine {

/// The original job plus optional embeddings of translated sides. Each
/// translated set is line-aligned with the side it was translated from and
/// carries that side's ids.
struct ChannelInputs {
    const Job* original = nullptr;
    std::optional<EmbeddingSet> source_translated;  // X translated into Y's language
    std::optional<EmbeddingSet> target_translated;  // Y translated into X's language
};

/// Mines one channel. EnToXx mines translated source against the original
/// target; XxToEn mines translated target (query role) against the original
/// source and flips the result back to (source, target).
inline PairSet
mine_channel(const ChannelInputs& inputs, Channel which, const MiningConfig& cfg,
             MineStats* stats = nullptr) {
    if (inputs.original == nullptr) {
        throw Error(ErrorCode::MissingChannel, "original job is missing");
    }
    const Job& job = *inputs.original;
    switch (which) {
        case Channel::Original:
            return mine_vectors(job, job.source_embeddings, job.target_embeddings, cfg,
                                Channel::Original, false, stats);
        case Channel::EnToXx:
            if (!inputs.source_translated) {
                throw Error(ErrorCode::MissingChannel, "en_to_xx channel needs translated source embeddings");
            }
            return mine_vectors(job, *inputs.source_translated, job.target_embeddings, cfg,
                                Channel::EnToXx, false, stats);
        case Channel::XxToEn:
            if (!inputs.target_translated) {
                throw Error(ErrorCode::MissingChannel, "xx_to_en channel needs translated target embeddings");
            }
            return mine_vectors(job, job.source_embeddings, *inputs.target_translated, cfg,
                                Channel::XxToEn, true, stats);
        case Channel::Combined:
            break;
    }
    throw Error(ErrorCode::MissingChannel, "combined is not a minable channel");
}

enum class CombineMode { StrictInt, PairwiseInt };

/// Vote over three channel outputs: StrictInt keeps keys present in all
/// three, PairwiseInt keys present in at least two. Membership depends only
/// on keys; the kept score is the max over the sets containing the key.
inline PairSet
combine(const PairSet& p_orig, const PairSet& p_en_xx, const PairSet& p_xx_en, CombineMode mode) {
    struct Tally {
        const CandidatePair* pair = nullptr;
        int votes = 0;
        double score = 0.0;
    };
    std::map<PairKey, Tally> tally;
    for (const PairSet* set : {&p_orig, &p_en_xx, &p_xx_en}) {
        for (const auto& [key, pair] : *set) {
            auto& t = tally[key];
            t.score = t.votes == 0 ? pair.score : std::max(t.score, pair.score);
            t.pair = &pair;
            t.votes++;
        }
    }
    const int needed = mode == CombineMode::StrictInt ? 3 : 2;
    PairSet out(mode == CombineMode::StrictInt ? "strict" : "pairwise");
    for (const auto& [key, t] : tally) {
        if (t.votes >= needed) {
            out.insert({t.pair->src, t.pair->tgt, t.score, Channel::Combined});
        }
    }
    return out;
}

/// Full secondary procedure: mine all three channels and vote.
inline PairSet
mine_and_combine(const ChannelInputs& inputs, const MiningConfig& cfg, CombineMode mode,
                 MineStats* stats = nullptr) {
    auto orig = mine_channel(inputs, Channel::Original, cfg, stats);
    auto en_xx = mine_channel(inputs, Channel::EnToXx, cfg, stats);
    auto xx_en = mine_channel(inputs, Channel::XxToEn, cfg, stats);
    return combine(orig, en_xx, xx_en, mode);
}

}  // namespace margin_mine
