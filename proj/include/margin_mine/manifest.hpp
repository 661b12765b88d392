#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "margin_mine/channels.hpp"
#include "margin_mine/core.hpp"
#include "margin_mine/io.hpp"

namespace margin_mine {

/// Named threshold presets: 1.06 is the common large-scale mining cutoff,
/// 1.20 the best BUCC cutoff, 1.35 a high-precision cutoff.
inline const std::map<std::string, double, std::less<>>&
threshold_presets() {
    static const std::map<std::string, double, std::less<>> presets{
        {"ccmatrix", 1.06},
        {"bucc", 1.20},
        {"high", 1.35},
    };
    return presets;
}

inline std::optional<double>
parse_threshold(std::string_view text) {
    if (text.empty() || text == "none") {
        return std::nullopt;
    }
    if (auto it = threshold_presets().find(text); it != threshold_presets().end()) {
        return it->second;
    }
    if (text == "inf" || text == "+inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || std::isnan(v)) {
        throw Error(ErrorCode::InvalidConfig, "invalid threshold '" + std::string(text) + "'");
    }
    return v;
}

inline JoinMethod
parse_join(std::string_view text) {
    if (text == "intersect") {
        return JoinMethod::Intersect;
    }
    if (text == "union") {
        return JoinMethod::Union;
    }
    if (text == "max-score" || text == "max_score") {
        return JoinMethod::MaxScore;
    }
    throw Error(ErrorCode::InvalidConfig, "join must be intersect, union or max-score");
}

inline Scope
parse_scope(std::string_view text) {
    if (text == "doc" || text == "document") {
        return Scope::Document;
    }
    if (text == "global") {
        return Scope::Global;
    }
    throw Error(ErrorCode::InvalidConfig, "scope must be doc or global");
}

inline CombineMode
parse_combine_mode(std::string_view text) {
    if (text == "strict") {
        return CombineMode::StrictInt;
    }
    if (text == "pairwise") {
        return CombineMode::PairwiseInt;
    }
    throw Error(ErrorCode::InvalidConfig, "combine mode must be strict or pairwise");
}

inline std::size_t
parse_count(std::string_view text, std::string_view what) {
    std::size_t v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be a non-negative integer");
    }
    return v;
}

/// Replayable description of a mining run. Manifest files hold `key = value`
/// lines; `#` starts a comment; relative paths resolve against the manifest
/// directory.
struct JobManifest {
    std::map<std::string, std::string> paths;  // src_meta, tgt_meta, src_emb, ...
    MiningConfig config;
    std::optional<Channel> channel;
    std::optional<CombineMode> combine;
    std::optional<std::string> out;
    std::optional<std::size_t> threads;

    std::optional<std::filesystem::path>
    path(const std::string& key) const {
        auto it = paths.find(key);
        if (it == paths.end()) {
            return std::nullopt;
        }
        return std::filesystem::path(it->second);
    }

    void
    validate() const {
        config.validate();
        for (const auto& [key, p] : paths) {
            if (!std::filesystem::exists(p)) {
                throw Error(ErrorCode::InvalidConfig, "manifest " + key + " '" + p + "' does not exist");
            }
        }
    }
};

inline const std::vector<std::string>&
manifest_path_keys() {
    static const std::vector<std::string> keys{"src_meta",      "tgt_meta",      "src_emb", "tgt_emb",
                                               "src_trans_emb", "tgt_trans_emb", "links"};
    return keys;
}

inline JobManifest
parse_manifest(const std::filesystem::path& file) {
    JobManifest m;
    const auto base = file.parent_path();
    auto resolve = [&](const std::string& v) {
        std::filesystem::path p(v);
        return (p.is_relative() ? base / p : p).string();
    };
    auto lines = io::read_lines(file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i];
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            if (b == std::string::npos) {
                return std::string();
            }
            const auto e = s.find_last_not_of(" \t");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty() || line.front() == '[') {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            io::format_error(file, i + 1, "expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        try {
            if (std::find(manifest_path_keys().begin(), manifest_path_keys().end(), key) !=
                manifest_path_keys().end()) {
                m.paths[key] = resolve(value);
            } else if (key == "k") {
                m.config.k = parse_count(value, "k");
            } else if (key == "join") {
                m.config.join = parse_join(value);
            } else if (key == "threshold") {
                m.config.threshold = parse_threshold(value);
            } else if (key == "scope") {
                m.config.scope = parse_scope(value);
            } else if (key == "strict_mean") {
                m.config.mean_mode = value == "true" ? MeanMode::Strict : MeanMode::Adaptive;
            } else if (key == "threads") {
                m.threads = parse_count(value, "threads");
                m.config.threads = *m.threads;
            } else if (key == "channel") {
                auto c = parse_channel(value);
                if (!c || *c == Channel::Combined) {
                    throw Error(ErrorCode::InvalidConfig, "channel must be original, en_to_xx or xx_to_en");
                }
                m.channel = c;
            } else if (key == "combine") {
                m.combine = parse_combine_mode(value);
            } else if (key == "out") {
                m.out = resolve(value);
            } else {
                throw Error(ErrorCode::InvalidConfig, "unknown manifest key '" + key + "'");
            }
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidConfig, file.string() + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return m;
}

}  // namespace margin_mine
