#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "margin_mine/core.hpp"
#include "margin_mine/eval.hpp"
#include "margin_mine/filters.hpp"
#include "margin_mine/job.hpp"

namespace margin_mine::io {

namespace fs = std::filesystem;

[[noreturn]] inline void
format_error(const fs::path& path, std::size_t line, const std::string& message) {
    throw Error(ErrorCode::FormatError, path.string() + ":" + std::to_string(line) + ": " + message);
}

inline std::ifstream
open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
    }
    return in;
}

inline std::ofstream
open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    }
    return out;
}

inline std::vector<std::string_view>
split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find('\t', start);
        fields.push_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
        if (pos == std::string_view::npos) {
            return fields;
        }
        start = pos + 1;
    }
}

/// Reads lines, stripping a trailing CR. Returns (line number, text).
inline std::vector<std::string>
read_lines(const fs::path& path) {
    auto in = open_in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

inline void
write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    auto out = open_out(path, std::ios::binary);
    for (const auto& l : lines) {
        out << l << '\n';
    }
}

// --- sentence metadata (JSON lines) -----------------------------------------

inline CorpusSide
read_metadata(const fs::path& path, Side side) {
    CorpusSide corpus{side, {}};
    auto in = open_in(path, std::ios::binary);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            format_error(path, lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) {
            format_error(path, lineno, "expected a JSON object");
        }
        auto field = [&](const char* name) -> std::string {
            auto it = obj.find(name);
            if (it == obj.end() || !it->is_string()) {
                format_error(path, lineno, std::string("missing string field '") + name + "'");
            }
            return it->get<std::string>();
        };
        Sentence s;
        s.id = {side, field("id")};
        s.doc_id = field("doc");
        s.lang = field("lang");
        s.text = field("text");
        if (!is_valid_key(s.id.key)) {
            format_error(path, lineno, "invalid sentence id '" + s.id.key + "'");
        }
        corpus.sentences.push_back(std::move(s));
    }
    return corpus;
}

inline void
write_metadata(const fs::path& path, const CorpusSide& corpus) {
    auto out = open_out(path, std::ios::binary);
    for (const auto& s : corpus.sentences) {
        nlohmann::ordered_json obj;
        obj["id"] = s.id.key;
        obj["doc"] = s.doc_id;
        obj["lang"] = s.lang;
        obj["text"] = s.text;
        out << obj.dump() << '\n';
    }
}

// --- EMB1 binary embeddings -------------------------------------------------

inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 20;

struct RawEmbeddings {
    std::uint32_t dim = 0;
    std::vector<float> values;  // count * dim, row-major

    std::size_t
    count() const {
        return dim == 0 ? 0 : values.size() / dim;
    }
};

namespace detail {

template <typename T>
T
load_le(const unsigned char* p) {
    T v{};
    std::memcpy(&v, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        auto* b = reinterpret_cast<unsigned char*>(&v);
        std::reverse(b, b + sizeof(T));
    }
    return v;
}

template <typename T>
void
store_le(std::string& out, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(b, b + sizeof(T));
    }
    out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

}  // namespace detail

inline RawEmbeddings
read_embeddings(const fs::path& path) {
    auto in = open_in(path, std::ios::binary);
    unsigned char header[kEmbeddingHeaderBytes];
    if (!in.read(reinterpret_cast<char*>(header), sizeof(header))) {
        format_error(path, 0, "truncated EMB1 header");
    }
    if (std::memcmp(header, kEmbeddingMagic, 4) != 0) {
        format_error(path, 0, "bad magic, expected EMB1");
    }
    const auto version = detail::load_le<std::uint32_t>(header + 4);
    if (version != kEmbeddingVersion) {
        format_error(path, 0, "unsupported EMB1 version " + std::to_string(version));
    }
    RawEmbeddings raw;
    raw.dim = detail::load_le<std::uint32_t>(header + 8);
    const auto count = detail::load_le<std::uint64_t>(header + 12);
    if (raw.dim == 0) {
        format_error(path, 0, "dimension must be >= 1");
    }
    const auto file_size = fs::file_size(path);
    const std::uint64_t expected = kEmbeddingHeaderBytes + count * raw.dim * sizeof(float);
    if (file_size != expected) {
        format_error(path, 0,
                     "size " + std::to_string(file_size) + " does not match header (" + std::to_string(expected) +
                         " bytes expected)");
    }
    raw.values.resize(count * raw.dim);
    std::vector<unsigned char> buf(raw.values.size() * sizeof(float));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) {
        format_error(path, 0, "truncated EMB1 payload");
    }
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
        raw.values[i] = detail::load_le<float>(buf.data() + i * sizeof(float));
    }
    return raw;
}

inline void
write_embeddings(const fs::path& path, std::uint32_t dim, std::span<const float> values) {
    if (dim == 0 || values.size() % dim != 0) {
        throw Error(ErrorCode::DimensionMismatch, "embedding payload is not a whole number of rows");
    }
    std::string bytes;
    bytes.reserve(kEmbeddingHeaderBytes + values.size() * sizeof(float));
    bytes.append(kEmbeddingMagic, 4);
    detail::store_le<std::uint32_t>(bytes, kEmbeddingVersion);
    detail::store_le<std::uint32_t>(bytes, dim);
    detail::store_le<std::uint64_t>(bytes, values.size() / dim);
    for (float v : values) {
        detail::store_le<float>(bytes, v);
    }
    auto out = open_out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void
write_embeddings(const fs::path& path, const EmbeddingSet& set) {
    write_embeddings(path, static_cast<std::uint32_t>(set.dim()), set.values());
}

/// Binds raw rows to the ids of a metadata file (row i <-> line i).
inline EmbeddingSet
bind_embeddings(RawEmbeddings raw, const CorpusSide& side) {
    if (raw.count() != side.sentences.size()) {
        throw Error(ErrorCode::IdMismatch,
                    std::string(side_name(side.side)) + " metadata has " + std::to_string(side.sentences.size()) +
                        " sentences but the embedding file has " + std::to_string(raw.count()) + " rows");
    }
    std::vector<SentenceId> ids;
    ids.reserve(side.sentences.size());
    for (const auto& s : side.sentences) {
        ids.push_back(s.id);
    }
    return validate_embedding_set(raw.dim, std::move(raw.values), std::move(ids));
}

// --- document links ---------------------------------------------------------

inline std::vector<DocumentLink>
read_links(const fs::path& path) {
    std::vector<DocumentLink> links;
    auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        auto f = split_tabs(lines[i]);
        if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty()) {
            format_error(path, i + 1, "expected link_id<TAB>src_doc<TAB>tgt_doc");
        }
        links.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2])});
    }
    return links;
}

inline void
write_links(const fs::path& path, const std::vector<DocumentLink>& links) {
    auto out = open_out(path, std::ios::binary);
    for (const auto& l : links) {
        out << l.link_id << '\t' << l.src_doc << '\t' << l.tgt_doc << '\n';
    }
}

// --- jobs -------------------------------------------------------------------

struct JobPaths {
    fs::path src_meta;
    fs::path tgt_meta;
    fs::path src_emb;
    fs::path tgt_emb;
    std::optional<fs::path> links;
};

inline Job
load_job(const JobPaths& p) {
    auto source = read_metadata(p.src_meta, Side::Source);
    auto target = read_metadata(p.tgt_meta, Side::Target);
    auto src_emb = bind_embeddings(read_embeddings(p.src_emb), source);
    auto tgt_emb = bind_embeddings(read_embeddings(p.tgt_emb), target);
    std::vector<DocumentLink> links;
    if (p.links) {
        links = read_links(*p.links);
    }
    return assemble_job(std::move(source), std::move(target), std::move(src_emb), std::move(tgt_emb),
                        std::move(links));
}

inline void
write_job(const JobPaths& p, const Job& job) {
    write_metadata(p.src_meta, job.source);
    write_metadata(p.tgt_meta, job.target);
    write_embeddings(p.src_emb, job.source_embeddings);
    write_embeddings(p.tgt_emb, job.target_embeddings);
    if (p.links) {
        write_links(*p.links, job.links);
    }
}

/// Loads translated-side embeddings, bound to the ids of `side`.
inline EmbeddingSet
load_channel_embeddings(const fs::path& path, const CorpusSide& side) {
    return bind_embeddings(read_embeddings(path), side);
}

// --- pairs ------------------------------------------------------------------

/// Shortest decimal that round-trips the score as a 32-bit float.
inline std::string
format_score(double score) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(score));
    return std::string(buf, res.ptr);
}

inline std::string
format_pairs(const PairSet& pairs) {
    std::string out;
    for (const auto& [key, p] : pairs) {
        out += p.src.key;
        out += '\t';
        out += p.tgt.key;
        out += '\t';
        out += format_score(p.score);
        out += '\t';
        out += channel_name(p.channel);
        out += '\n';
    }
    return out;
}

inline void
write_pairs(const fs::path& path, const PairSet& pairs) {
    auto out = open_out(path, std::ios::binary);
    out << format_pairs(pairs);
}

inline double
parse_double(std::string_view text, const fs::path& path, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        format_error(path, line, "invalid number '" + std::string(text) + "'");
    }
    return v;
}

inline PairSet
read_pairs(const fs::path& path) {
    PairSet pairs(path.stem().string());
    auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        auto f = split_tabs(lines[i]);
        if (f.size() != 4) {
            format_error(path, i + 1, "expected src<TAB>tgt<TAB>score<TAB>channel");
        }
        if (!is_valid_key(f[0]) || !is_valid_key(f[1])) {
            format_error(path, i + 1, "empty sentence id");
        }
        auto channel = parse_channel(f[3]);
        if (!channel) {
            format_error(path, i + 1, "unknown channel '" + std::string(f[3]) + "'");
        }
        const double score = parse_double(f[2], path, i + 1);
        if (!std::isfinite(score)) {
            format_error(path, i + 1, "non-finite score");
        }
        pairs.insert({{Side::Source, std::string(f[0])}, {Side::Target, std::string(f[1])}, score, *channel});
    }
    return pairs;
}

inline GoldAlignment
read_gold(const fs::path& path) {
    GoldAlignment gold;
    auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        auto f = split_tabs(lines[i]);
        if (f.size() < 2 || !is_valid_key(f[0]) || !is_valid_key(f[1])) {
            format_error(path, i + 1, "expected src<TAB>tgt");
        }
        if (!gold.emplace(std::string(f[0]), std::string(f[1])).second) {
            format_error(path, i + 1, "duplicate gold pair");
        }
    }
    return gold;
}

// --- texts ------------------------------------------------------------------

inline std::unordered_map<std::string, std::string>
texts_by_key(const CorpusSide& side) {
    std::unordered_map<std::string, std::string> out;
    for (const auto& s : side.sentences) {
        out.emplace(s.id.key, s.text);
    }
    return out;
}

/// Reads a translation file line-aligned with `side`'s metadata.
inline std::unordered_map<std::string, std::string>
read_translations(const fs::path& path, const CorpusSide& side) {
    auto lines = read_lines(path);
    if (lines.size() != side.sentences.size()) {
        throw Error(ErrorCode::IdMismatch, path.string() + " has " + std::to_string(lines.size()) +
                                               " lines but the metadata has " +
                                               std::to_string(side.sentences.size()) + " sentences");
    }
    std::unordered_map<std::string, std::string> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out.emplace(side.sentences[i].id.key, std::move(lines[i]));
    }
    return out;
}

inline StopwordSet
read_stopwords(const fs::path& path) {
    StopwordSet out;
    for (auto& l : read_lines(path)) {
        auto t = clean_sentence(l, CleanupConfig{false, false, true, {}});
        if (!t.empty()) {
            out.insert(unicode::to_lower(t));
        }
    }
    return out;
}

/// Filter spec file: one filter per line, `kind key=value ...`, `#` starts a
/// comment. Keys: min, max, n, translated=source|target, stopwords=<path>
/// (resolved relative to the spec file).
inline std::vector<FilterSpec>
read_filter_specs(const fs::path& path) {
    std::vector<FilterSpec> specs;
    auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i];
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream words(line);
        std::string kind;
        if (!(words >> kind)) {
            continue;
        }
        FilterSpec spec;
        if (kind == "length_ratio") {
            spec.kind = FilterKind::LengthRatio;
        } else if (kind == "lexical_overlap") {
            spec.kind = FilterKind::LexicalOverlap;
        } else if (kind == "nonstopword_overlap") {
            spec.kind = FilterKind::NonStopwordOverlap;
        } else if (kind == "bleu") {
            spec.kind = FilterKind::BleuVsTranslation;
        } else {
            format_error(path, i + 1, "unknown filter '" + kind + "'");
        }
        std::string kv;
        while (words >> kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) {
                format_error(path, i + 1, "expected key=value, got '" + kv + "'");
            }
            std::string key = kv.substr(0, eq);
            std::string value = kv.substr(eq + 1);
            if (key == "min") {
                spec.min = parse_double(value, path, i + 1);
            } else if (key == "max") {
                spec.max = parse_double(value, path, i + 1);
            } else if (key == "n") {
                spec.bleu_n = static_cast<int>(parse_double(value, path, i + 1));
            } else if (key == "translated") {
                if (value != "source" && value != "target") {
                    format_error(path, i + 1, "translated must be source or target");
                }
                spec.translated = value == "source" ? Side::Source : Side::Target;
            } else if (key == "stopwords") {
                fs::path sw = value;
                if (sw.is_relative()) {
                    sw = path.parent_path() / sw;
                }
                spec.stopwords = read_stopwords(sw);
            } else {
                format_error(path, i + 1, "unknown key '" + key + "'");
            }
        }
        try {
            spec.validate();
        } catch (const Error& e) {
            format_error(path, i + 1, e.what());
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

// --- reports ----------------------------------------------------------------

inline nlohmann::ordered_json
report_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["n_pred"] = r.n_pred;
    j["n_gold"] = r.n_gold;
    j["n_correct"] = r.n_correct;
    return j;
}

inline EvalReport
read_report(const fs::path& path) {
    auto in = open_in(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        EvalReport r;
        r.precision = j.at("precision").get<double>();
        r.recall = j.at("recall").get<double>();
        r.f1 = j.at("f1").get<double>();
        r.n_pred = j.at("n_pred").get<std::size_t>();
        r.n_gold = j.at("n_gold").get<std::size_t>();
        r.n_correct = j.at("n_correct").get<std::size_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        format_error(path, 0, std::string("bad report: ") + e.what());
    }
}

inline std::string
histogram_csv(const MarginHistogram& h) {
    std::ostringstream out;
    out << "bin_lo,bin_hi,count\n";
    out << std::setprecision(9);
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        out << h.bin_edges[i] << ',' << h.bin_edges[i + 1] << ',' << h.counts[i] << '\n';
    }
    return out.str();
}

/// Minimal bar chart of a histogram.
inline std::string
histogram_svg(const MarginHistogram& h, std::string_view title = "margin scores") {
    constexpr double kWidth = 640;
    constexpr double kHeight = 360;
    constexpr double kPad = 40;
    const std::size_t peak = std::max<std::size_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
    const double bar_w = (kWidth - 2 * kPad) / static_cast<double>(h.counts.size());
    std::ostringstream out;
    out << std::setprecision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"14\">" << title << " (n=" << h.total << ")</text>\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double bh = (kHeight - 2 * kPad) * static_cast<double>(h.counts[i]) / static_cast<double>(peak);
        out << "<rect x=\"" << kPad + bar_w * static_cast<double>(i) << "\" y=\"" << kHeight - kPad - bh
            << "\" width=\"" << bar_w * 0.9 << "\" height=\"" << bh << "\" fill=\"steelblue\"/>\n";
    }
    out << "<line x1=\"" << kPad << "\" y1=\"" << kHeight - kPad << "\" x2=\"" << kWidth - kPad << "\" y2=\""
        << kHeight - kPad << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kPad << "\" y=\"" << kHeight - kPad / 3 << "\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << h.bin_edges.front() << "</text>\n";
    out << "<text x=\"" << kWidth - kPad << "\" y=\"" << kHeight - kPad / 3
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << h.bin_edges.back()
        << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

inline std::string
summary_csv(const std::vector<MethodSummary>& rows) {
    std::set<std::string> levels;
    for (const auto& r : rows) {
        for (const auto& [lv, _] : r.mean_delta_by_level) {
            levels.insert(lv);
        }
    }
    std::ostringstream out;
    out << std::setprecision(9);
    out << "method,mean_delta_f1,best_count,languages";
    for (const auto& lv : levels) {
        out << ",delta_level_" << lv;
    }
    out << '\n';
    for (const auto& r : rows) {
        out << r.method << ',' << r.mean_delta_f1 << ',' << r.best_count << ',' << r.languages;
        for (const auto& lv : levels) {
            out << ',';
            if (auto it = r.mean_delta_by_level.find(lv); it != r.mean_delta_by_level.end()) {
                out << it->second;
            }
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace margin_mine::io
