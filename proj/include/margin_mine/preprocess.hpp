#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "margin_mine/core.hpp"
#include "margin_mine/job.hpp"
#include "margin_mine/unicode.hpp"

namespace margin_mine {

struct CleanupConfig {
    bool strip_urls = false;
    bool strip_nonstandard_chars = false;
    bool collapse_whitespace = false;
    std::vector<std::string> noise_tokens;

    static CleanupConfig
    all(std::vector<std::string> noise = {}) {
        return {true, true, true, std::move(noise)};
    }

    bool
    is_noop() const {
        return !strip_urls && !strip_nonstandard_chars && !collapse_whitespace && noise_tokens.empty();
    }

    void
    validate() const {
        for (const auto& t : noise_tokens) {
            if (t.empty()) {
                throw Error(ErrorCode::InvalidConfig, "noise tokens must be non-empty");
            }
        }
    }
};

namespace detail {

inline const std::regex&
url_pattern() {
    static const std::regex re(R"((?:[A-Za-z][A-Za-z0-9+.\-]*://|[Ww][Ww][Ww]\.)[^\s]*)");
    return re;
}

inline std::string
strip_nonstandard(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (auto c : unicode::decode(text)) {
        if (unicode::is_standard(c)) {
            unicode::append(out, c);
        }
    }
    return out;
}

inline std::string
remove_all(std::string text, std::string_view token) {
    for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos)) {
        text.erase(pos, token.size());
        pos = pos >= token.size() ? pos - token.size() + 1 : 0;
    }
    return text;
}

inline std::string
collapse_spaces(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending = false;
    for (auto c : unicode::decode(text)) {
        if (unicode::is_space(c)) {
            pending = !out.empty();
            continue;
        }
        if (pending) {
            out.push_back(' ');
            pending = false;
        }
        unicode::append(out, c);
    }
    return out;
}

inline std::string
clean_once(const std::string& text, const CleanupConfig& cfg) {
    std::string s = text;
    if (cfg.strip_nonstandard_chars) {
        s = strip_nonstandard(s);
    }
    if (cfg.strip_urls) {
        s = std::regex_replace(s, url_pattern(), "");
    }
    for (const auto& token : cfg.noise_tokens) {
        s = remove_all(std::move(s), token);
    }
    if (cfg.collapse_whitespace) {
        s = collapse_spaces(s);
    }
    return s;
}

}  // namespace detail

/// Removes URLs, non-standard characters, literal noise tokens and
/// redundant whitespace, as enabled. Passes repeat until the text stops
/// changing, so cleaning twice equals cleaning once.
inline std::string
clean_sentence(std::string_view text, const CleanupConfig& cfg) {
    cfg.validate();
    std::string current(text);
    if (cfg.is_noop()) {
        return current;
    }
    for (;;) {
        std::string next = detail::clean_once(current, cfg);
        if (next == current) {
            return current;
        }
        current = std::move(next);
    }
}

struct CleanedSide {
    CorpusSide side;
    std::vector<std::size_t> kept_rows;  // rows of the input that survived
    std::vector<std::string> dropped_ids;
};

/// Cleans every sentence of a side and drops those left empty.
inline CleanedSide
clean_corpus(const CorpusSide& side, const CleanupConfig& cfg) {
    CleanedSide out;
    out.side.side = side.side;
    for (std::size_t i = 0; i < side.sentences.size(); ++i) {
        Sentence s = side.sentences[i];
        s.text = clean_sentence(s.text, cfg);
        if (s.text.empty()) {
            out.dropped_ids.push_back(s.id.key);
            continue;
        }
        out.kept_rows.push_back(i);
        out.side.sentences.push_back(std::move(s));
    }
    return out;
}

/// Number of whitespace-separated tokens.
inline std::size_t
word_count(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (auto c : unicode::decode(text)) {
        if (unicode::is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

enum class LengthMode { AbsoluteWords, BottomPercentile };

struct DocLengthFilter {
    LengthMode mode = LengthMode::AbsoluteWords;
    double src_min = 0;
    double tgt_min = 0;
    std::optional<double> percentile;

    static DocLengthFilter
    absolute_words(double src_min, double tgt_min) {
        return {LengthMode::AbsoluteWords, src_min, tgt_min, std::nullopt};
    }

    static DocLengthFilter
    bottom_percentile(double fraction) {
        return {LengthMode::BottomPercentile, 0, 0, fraction};
    }

    void
    validate() const {
        if (mode == LengthMode::BottomPercentile) {
            if (!percentile || !(*percentile >= 0.0 && *percentile < 1.0)) {
                throw Error(ErrorCode::InvalidConfig, "percentile must lie in [0, 1)");
            }
        } else if (percentile) {
            throw Error(ErrorCode::InvalidConfig, "percentile is only valid in bottom-percentile mode");
        }
        if (!std::isfinite(src_min) || !std::isfinite(tgt_min) || src_min < 0 || tgt_min < 0) {
            throw Error(ErrorCode::InvalidConfig, "minimum lengths must be finite and >= 0");
        }
    }
};

struct DocPairStats {
    DocumentLink link;
    std::size_t src_words = 0;
    std::size_t tgt_words = 0;
    std::size_t src_sentences = 0;
    std::size_t tgt_sentences = 0;

    friend bool
    operator==(const DocPairStats&, const DocPairStats&) = default;
};

struct DocFilterResult {
    std::vector<DocPairStats> kept;
    std::vector<DocPairStats> dropped;
    // Realized per-side sentence cutoffs in bottom-percentile mode.
    std::optional<std::size_t> src_cutoff_sentences;
    std::optional<std::size_t> tgt_cutoff_sentences;
};

/// Word and sentence counts of both documents of every link.
inline std::vector<DocPairStats>
document_stats(const CorpusSide& source, const CorpusSide& target, const std::vector<DocumentLink>& links) {
    struct Count {
        std::size_t words = 0;
        std::size_t sentences = 0;
    };
    auto tally = [](const CorpusSide& side) {
        std::unordered_map<std::string, Count> counts;
        for (const auto& s : side.sentences) {
            auto& c = counts[s.doc_id];
            c.words += word_count(s.text);
            c.sentences++;
        }
        return counts;
    };
    const auto src = tally(source);
    const auto tgt = tally(target);
    std::vector<DocPairStats> out;
    out.reserve(links.size());
    for (const auto& l : links) {
        DocPairStats st{l};
        if (auto it = src.find(l.src_doc); it != src.end()) {
            st.src_words = it->second.words;
            st.src_sentences = it->second.sentences;
        }
        if (auto it = tgt.find(l.tgt_doc); it != tgt.end()) {
            st.tgt_words = it->second.words;
            st.tgt_sentences = it->second.sentences;
        }
        out.push_back(std::move(st));
    }
    return out;
}

/// Drops short document pairs. Absolute mode drops a pair whose source has
/// fewer than src_min words or whose target has fewer than tgt_min words.
/// Percentile mode drops exactly floor(p * N) pairs, shortest first, ordered
/// by the shorter side's sentence count, then its word count, then doc ids.
/// Kept pairs preserve input order.
inline DocFilterResult
filter_documents(const std::vector<DocPairStats>& pairs, const DocLengthFilter& f) {
    f.validate();
    DocFilterResult r;
    if (f.mode == LengthMode::AbsoluteWords) {
        for (const auto& p : pairs) {
            const bool short_doc = static_cast<double>(p.src_words) < f.src_min ||
                                   static_cast<double>(p.tgt_words) < f.tgt_min;
            (short_doc ? r.dropped : r.kept).push_back(p);
        }
    } else {
        const std::size_t n = pairs.size();
        const auto n_drop = static_cast<std::size_t>(std::floor(*f.percentile * static_cast<double>(n)));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        auto sort_key = [&](std::size_t i) {
            const auto& p = pairs[i];
            return std::make_tuple(std::min(p.src_sentences, p.tgt_sentences),
                                   p.src_sentences <= p.tgt_sentences ? p.src_words : p.tgt_words,
                                   std::cref(p.link.src_doc), std::cref(p.link.tgt_doc),
                                   std::cref(p.link.link_id));
        };
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return sort_key(a) < sort_key(b); });
        std::vector<bool> drop(n, false);
        for (std::size_t i = 0; i < n_drop; ++i) {
            drop[order[i]] = true;
        }
        for (std::size_t i = 0; i < n; ++i) {
            (drop[i] ? r.dropped : r.kept).push_back(pairs[i]);
        }
        if (n > 0) {
            std::vector<std::size_t> src_len;
            std::vector<std::size_t> tgt_len;
            for (const auto& p : pairs) {
                src_len.push_back(p.src_sentences);
                tgt_len.push_back(p.tgt_sentences);
            }
            std::sort(src_len.begin(), src_len.end());
            std::sort(tgt_len.begin(), tgt_len.end());
            const std::size_t at = std::min(n_drop, n - 1);
            r.src_cutoff_sentences = src_len[at];
            r.tgt_cutoff_sentences = tgt_len[at];
        }
    }
    if (r.kept.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "document filter removed every document pair");
    }
    return r;
}

}  // namespace margin_mine
