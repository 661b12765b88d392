#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "margin_mine/core.hpp"

namespace margin_mine {

struct DocumentLink {
    std::string link_id;
    std::string src_doc;
    std::string tgt_doc;

    friend bool
    operator==(const DocumentLink&, const DocumentLink&) = default;
};

struct CorpusSide {
    Side side = Side::Source;
    std::vector<Sentence> sentences;

    friend bool
    operator==(const CorpusSide&, const CorpusSide&) = default;
};

/// A validated mining job: both corpus sides, one embedding row per
/// sentence (same order), and the document links.
struct Job {
    CorpusSide source;
    CorpusSide target;
    EmbeddingSet source_embeddings;
    EmbeddingSet target_embeddings;
    std::vector<DocumentLink> links;

    friend bool
    operator==(const Job&, const Job&) = default;
};

namespace detail {

inline void
check_rows_match(const CorpusSide& side, const EmbeddingSet& emb) {
    if (side.sentences.size() != emb.size()) {
        throw Error(ErrorCode::IdMismatch,
                    std::string(side_name(side.side)) + " side has " +
                        std::to_string(side.sentences.size()) + " sentences but " +
                        std::to_string(emb.size()) + " embedding rows");
    }
    for (std::size_t i = 0; i < emb.size(); ++i) {
        if (side.sentences[i].id != emb.id(i)) {
            throw Error(ErrorCode::IdMismatch, std::string(side_name(side.side)) + " row " +
                                                   std::to_string(i) + ": sentence '" +
                                                   side.sentences[i].id.key + "' vs embedding '" +
                                                   emb.id(i).key + "'");
        }
    }
}

}  // namespace detail

/// Checks that `emb` carries exactly the ids of `side`, in order.
inline void
check_embeddings_for(const CorpusSide& side, const EmbeddingSet& emb) {
    detail::check_rows_match(side, emb);
}

inline Job
assemble_job(CorpusSide source, CorpusSide target, EmbeddingSet source_embeddings,
             EmbeddingSet target_embeddings, std::vector<DocumentLink> links) {
    source.side = Side::Source;
    target.side = Side::Target;
    for (const auto* side : {&source, &target}) {
        std::unordered_set<std::string_view> seen;
        for (const auto& s : side->sentences) {
            if (s.id.side != side->side) {
                throw Error(ErrorCode::IdMismatch, "sentence '" + s.id.key + "' is on the wrong side");
            }
            if (!is_valid_key(s.id.key)) {
                throw Error(ErrorCode::IdMismatch, "invalid sentence key '" + s.id.key + "'");
            }
            if (!seen.insert(s.id.key).second) {
                throw Error(ErrorCode::IdMismatch, "duplicate sentence key '" + s.id.key + "'");
            }
        }
    }
    if (!source_embeddings.empty() && !target_embeddings.empty() &&
        source_embeddings.dim() != target_embeddings.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "source and target embeddings differ in dim");
    }
    detail::check_rows_match(source, source_embeddings);
    detail::check_rows_match(target, target_embeddings);

    if (!links.empty()) {
        std::unordered_set<std::string> link_ids;
        std::unordered_set<std::string> src_docs;
        std::unordered_set<std::string> tgt_docs;
        for (const auto& l : links) {
            if (!link_ids.insert(l.link_id).second) {
                throw Error(ErrorCode::FormatError, "duplicate link id '" + l.link_id + "'");
            }
            src_docs.insert(l.src_doc);
            tgt_docs.insert(l.tgt_doc);
        }
        auto check_docs = [](const CorpusSide& side, const std::unordered_set<std::string>& docs) {
            for (const auto& s : side.sentences) {
                if (s.doc_id.empty() || docs.count(s.doc_id) == 0) {
                    throw Error(ErrorCode::MissingDocument,
                                std::string(side_name(side.side)) + " sentence '" + s.id.key +
                                    "' references unlinked document '" + s.doc_id + "'");
                }
            }
        };
        check_docs(source, src_docs);
        check_docs(target, tgt_docs);
    }
    return Job{std::move(source), std::move(target), std::move(source_embeddings),
               std::move(target_embeddings), std::move(links)};
}

/// Rows of each document on one side, keyed by doc id.
inline std::unordered_map<std::string, std::vector<std::size_t>>
rows_by_document(const CorpusSide& side) {
    std::unordered_map<std::string, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < side.sentences.size(); ++i) {
        out[side.sentences[i].doc_id].push_back(i);
    }
    return out;
}

}  // namespace margin_mine
