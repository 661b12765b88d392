#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "margin_mine/core.hpp"
#include "margin_mine/preprocess.hpp"
#include "margin_mine/unicode.hpp"

namespace margin_mine {

/// Splits on Unicode whitespace and detaches every punctuation character
/// into its own token.
inline std::vector<std::string>
tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    };
    for (auto c : unicode::decode(text)) {
        if (unicode::is_space(c)) {
            flush();
        } else if (unicode::is_punct(c)) {
            flush();
            unicode::append(current, c);
            flush();
        } else {
            unicode::append(current, c);
        }
    }
    flush();
    return out;
}

/// Shorter over longer whitespace-token count, in (0, 1].
inline double
length_ratio(std::string_view src_text, std::string_view tgt_text) {
    const auto a = word_count(src_text);
    const auto b = word_count(tgt_text);
    if (a == 0 || b == 0) {
        throw Error(ErrorCode::EmptyText, "length ratio needs two non-empty texts");
    }
    return static_cast<double>(std::min(a, b)) / static_cast<double>(std::max(a, b));
}

using StopwordSet = std::unordered_set<std::string>;

/// Jaccard index of the lowercased token sets, optionally without stopwords.
inline double
bow_overlap(const std::vector<std::string>& a_tokens, const std::vector<std::string>& b_tokens,
            const StopwordSet* stopwords = nullptr) {
    auto to_set = [stopwords](const std::vector<std::string>& tokens) {
        std::set<std::string> s;
        for (const auto& t : tokens) {
            auto lower = unicode::to_lower(t);
            if (stopwords && stopwords->count(lower)) {
                continue;
            }
            s.insert(std::move(lower));
        }
        return s;
    };
    const auto a = to_set(a_tokens);
    const auto b = to_set(b_tokens);
    if (a.empty() && b.empty()) {
        throw Error(ErrorCode::BothEmptyAfterFiltering, "no tokens left on either side");
    }
    std::size_t common = 0;
    for (const auto& t : a) {
        common += b.count(t);
    }
    const std::size_t all = a.size() + b.size() - common;
    return static_cast<double>(common) / static_cast<double>(all);
}

/// Sentence-level BLEU-n with add-one smoothing on every n-gram precision
/// and the usual brevity penalty.
inline double
sentence_bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference, int n) {
    if (n < 1 || n > 4) {
        throw Error(ErrorCode::InvalidConfig, "BLEU order must be in [1, 4]");
    }
    if (candidate.empty() || reference.empty()) {
        throw Error(ErrorCode::EmptyInput, "BLEU needs non-empty candidate and reference");
    }
    auto ngrams = [](const std::vector<std::string>& toks, std::size_t order) {
        std::map<std::vector<std::string>, std::size_t> counts;
        for (std::size_t i = 0; i + order <= toks.size(); ++i) {
            counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + order)]++;
        }
        return counts;
    };
    double log_sum = 0.0;
    for (int order = 1; order <= n; ++order) {
        const auto cand = ngrams(candidate, order);
        const auto ref = ngrams(reference, order);
        std::size_t matched = 0;
        std::size_t total = 0;
        for (const auto& [gram, count] : cand) {
            total += count;
            if (auto it = ref.find(gram); it != ref.end()) {
                matched += std::min(count, it->second);
            }
        }
        log_sum += std::log((static_cast<double>(matched) + 1.0) / (static_cast<double>(total) + 1.0));
    }
    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return bp * std::exp(log_sum / n);
}

enum class FilterKind { LengthRatio, LexicalOverlap, NonStopwordOverlap, BleuVsTranslation };

inline std::string_view
filter_kind_name(FilterKind kind) {
    switch (kind) {
        case FilterKind::LengthRatio:
            return "length_ratio";
        case FilterKind::LexicalOverlap:
            return "lexical_overlap";
        case FilterKind::NonStopwordOverlap:
            return "nonstopword_overlap";
        case FilterKind::BleuVsTranslation:
            return "bleu";
    }
    return "length_ratio";
}

struct FilterSpec {
    FilterKind kind = FilterKind::LengthRatio;
    double min = 0.0;
    std::optional<double> max;
    std::optional<StopwordSet> stopwords;
    int bleu_n = 4;
    // Which side's translation is compared against the other side's text.
    Side translated = Side::Source;

    bool
    needs_translation() const {
        return kind != FilterKind::LengthRatio;
    }

    void
    validate() const {
        if (max && min > *max) {
            throw Error(ErrorCode::InvalidConfig, "filter min exceeds max");
        }
        if (bleu_n < 1 || bleu_n > 4) {
            throw Error(ErrorCode::InvalidConfig, "bleu_n must be in [1, 4]");
        }
        if (kind == FilterKind::NonStopwordOverlap && !stopwords) {
            throw Error(ErrorCode::InvalidConfig, "non-stopword overlap needs a stopword list");
        }
    }
};

/// Sentence texts by key, plus optional line-aligned translations.
struct PairTexts {
    std::unordered_map<std::string, std::string> source;
    std::unordered_map<std::string, std::string> target;
    std::optional<std::unordered_map<std::string, std::string>> source_translations;
    std::optional<std::unordered_map<std::string, std::string>> target_translations;
};

struct FilterOutcome {
    PairSet kept;
    // Pairs failing each spec, counted independently per spec.
    std::vector<std::size_t> dropped_per_filter;
};

namespace detail {

inline const std::string&
lookup(const std::unordered_map<std::string, std::string>& texts, const std::string& key, ErrorCode code,
       std::string_view what) {
    auto it = texts.find(key);
    if (it == texts.end()) {
        throw Error(code, "no " + std::string(what) + " for sentence '" + key + "'");
    }
    return it->second;
}

/// Metric value, or nullopt when it is undefined for this pair.
inline std::optional<double>
filter_metric(const FilterSpec& spec, const CandidatePair& pair, const PairTexts& texts) {
    const auto& src = lookup(texts.source, pair.src.key, ErrorCode::IdMismatch, "source text");
    const auto& tgt = lookup(texts.target, pair.tgt.key, ErrorCode::IdMismatch, "target text");
    if (spec.kind == FilterKind::LengthRatio) {
        if (word_count(src) == 0 || word_count(tgt) == 0) {
            return std::nullopt;
        }
        return length_ratio(src, tgt);
    }
    const bool from_source = spec.translated == Side::Source;
    const auto& translations = from_source ? texts.source_translations : texts.target_translations;
    if (!translations) {
        throw Error(ErrorCode::MissingTranslation,
                    std::string(filter_kind_name(spec.kind)) + " needs " +
                        std::string(side_name(spec.translated)) + " translations");
    }
    const auto& translated = lookup(*translations, from_source ? pair.src.key : pair.tgt.key,
                                    ErrorCode::MissingTranslation, "translation");
    const auto hyp = tokenize(translated);
    const auto ref = tokenize(from_source ? tgt : src);
    switch (spec.kind) {
        case FilterKind::LexicalOverlap:
        case FilterKind::NonStopwordOverlap: {
            const StopwordSet* stop =
                spec.kind == FilterKind::NonStopwordOverlap && spec.stopwords ? &*spec.stopwords : nullptr;
            try {
                return bow_overlap(hyp, ref, stop);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::BothEmptyAfterFiltering) {
                    return std::nullopt;
                }
                throw;
            }
        }
        case FilterKind::BleuVsTranslation:
            if (hyp.empty() || ref.empty()) {
                return std::nullopt;
            }
            return sentence_bleu(hyp, ref, spec.bleu_n);
        case FilterKind::LengthRatio:
            break;
    }
    return std::nullopt;
}

}  // namespace detail

/// Keeps a pair iff every spec's metric lies in [min, max]. A pair whose
/// metric is undefined (e.g. nothing left after stopword removal) fails
/// that spec.
inline FilterOutcome
apply_filters(const PairSet& pairs, const std::vector<FilterSpec>& specs, const PairTexts& texts) {
    for (const auto& s : specs) {
        s.validate();
    }
    FilterOutcome out{PairSet(pairs.provenance()), std::vector<std::size_t>(specs.size(), 0)};
    for (const auto& [key, pair] : pairs) {
        bool keep = true;
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const auto value = detail::filter_metric(specs[i], pair, texts);
            const bool ok = value && *value >= specs[i].min && (!specs[i].max || *value <= *specs[i].max);
            if (!ok) {
                keep = false;
                out.dropped_per_filter[i]++;
            }
        }
        if (keep) {
            out.kept.insert(pair);
        }
    }
    return out;
}

}  // namespace margin_mine
